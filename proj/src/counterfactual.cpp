#include "tiltlik/counterfactual.hpp"

#include <cmath>
#include <limits>

namespace tiltlik {

namespace {

TiltedDraws finish(const MomentModel& moments, Matrix draws, ProjectionResult pr) {
  if (!pr.converged) {
    throw NoInteriorSolution(std::string("counterfactual: projection failed (") + to_string(pr.status) + ")");
  }
  if (!admissible_multipliers(moments, pr.mu)) {
    throw NoInteriorSolution("counterfactual: the tilt needs a multiplier outside the integrable domain");
  }
  TiltedDraws out;
  out.draws = std::move(draws);
  out.weights = pr.weights;
  out.projection = std::move(pr);
  return out;
}

// Weighted covariance of a scalar with each column of b, plus a Monte Carlo
// standard error from per-draw contributions.
void weighted_cov(const Vector& w, const Vector& a, const Matrix& b, Vector& cov, Vector& se) {
  const double n = static_cast<double>(w.size());
  const double abar = w.dot(a);
  const Vector bbar = b.transpose() * w;
  const Vector ac = a.array() - abar;
  const Matrix bc = b.rowwise() - bbar.transpose();
  cov.resize(b.cols());
  se.resize(b.cols());
  for (Index k = 0; k < b.cols(); ++k) {
    const Eigen::ArrayXd c = n * w.array() * ac.array() * bc.col(k).array();
    cov(k) = c.mean();
    se(k) = std::sqrt((c - cov(k)).square().sum() / (n - 1.0) / n);
  }
}

}  // namespace

TiltedDraws tilt_draws(const TiltedModel& model, const Vector& psi, const Vector& z, const Matrix& noise,
                       const SolverOptions& solver) {
  Matrix draws = model.density->transform_noise(z, model.phi(psi), noise);
  const Matrix m = model.moments->evaluate_draws(draws, z, model.theta(psi));
  return finish(*model.moments, std::move(draws), try_solve_multipliers(m, solver));
}

TiltedDraws reweighted_tilt(const TiltedModel& model, const Vector& psi, const Vector& z,
                            const Matrix& draws, const Vector& phi0, const SolverOptions& solver) {
  const Vector phi = model.phi(psi);
  Vector lw(draws.rows());
  for (Index j = 0; j < draws.rows(); ++j) {
    const Vector x = draws.row(j).transpose();
    lw(j) = model.density->logpdf(x, z, phi) - model.density->logpdf(x, z, phi0);
  }
  const Matrix m = model.moments->evaluate_draws(draws, z, model.theta(psi));
  return finish(*model.moments, draws, try_solve_multipliers_weighted(m, lw, solver));
}

EffectReport average_effect(const TiltedModel& model, const Vector& psi, const Vector& z,
                            const Target& target, const CounterfactualOptions& options) {
  model.validate();
  require_dim(psi.size() == model.psi_dim(), "average_effect: psi has wrong length");
  if (!target.fn) throw InvalidParameter("average_effect: target function is empty");
  RandomStream rng(options.seed);
  const Matrix noise = draw_noise(options.n_sim, model.density->noise_dim(), rng);
  const TiltedDraws td = tilt_draws(model, psi, z, noise, options.solver);

  const Vector theta = model.theta(psi);
  const Vector phi = model.phi(psi);
  const Index ns = td.draws.rows();
  const Index md = model.moments->m_dim();
  const Index tdim = model.theta_dim();
  const Index pdim = model.phi_dim();
  const Matrix m = model.moments->evaluate_draws(td.draws, z, theta);
  const Matrix jac = model.moments->jacobian_draws(td.draws, z, theta);
  const Matrix s = model.density->score_draws(td.draws, z, phi);
  const Vector& w = td.weights;
  const Vector& mu = td.projection.mu;

  Vector zeta(ns);
  for (Index j = 0; j < ns; ++j) zeta(j) = target.fn(td.draws.row(j).transpose());

  // mu'M_j for every draw (ns x theta_dim).
  Matrix mu_m(ns, tdim);
  mu_m.setZero();
  for (Index a = 0; a < md; ++a) mu_m += mu(a) * jac.middleCols(a * tdim, tdim);

  const Matrix emm = m.transpose() * w.asDiagonal() * m;
  Eigen::LDLT<Matrix> emm_inv(emm);
  if (emm_inv.info() != Eigen::Success || !emm_inv.isPositive()) {
    throw SingularMatrix("average_effect: tilted moment second-moment matrix is singular");
  }

  // E_H[M + m mu'M], m_dim x theta_dim
  Matrix rhs_theta(md, tdim);
  for (Index a = 0; a < md; ++a) {
    const Matrix ja = jac.middleCols(a * tdim, tdim);
    rhs_theta.row(a) = (ja.transpose() * w).transpose() + (mu_m.transpose() * w.cwiseProduct(m.col(a))).transpose();
  }
  const Matrix mu_theta = -emm_inv.solve(rhs_theta);
  const Matrix mu_phi = -emm_inv.solve(m.transpose() * w.asDiagonal() * s);

  const Matrix a_theta = m * mu_theta + mu_m;
  const Matrix a_phi = s + m * mu_phi;

  EffectReport out;
  out.target_name = target.name;
  out.z = z;
  out.mu = mu;
  out.lambda = td.projection.lambda;
  out.target_mean = w.dot(zeta);
  const double zvar = w.dot((zeta.array() - out.target_mean).square().matrix());
  out.constant_target = zeta.maxCoeff() == zeta.minCoeff() || !(zvar > 0.0);

  Vector se_t, se_p;
  weighted_cov(w, zeta, a_theta, out.d_dtheta, se_t);
  weighted_cov(w, zeta, a_phi, out.d_dphi, se_p);
  if (out.constant_target) {
    out.d_dtheta.setZero();
    out.d_dphi.setZero();
    se_t.setZero();
    se_p.setZero();
  }
  out.mc_se.resize(tdim + pdim);
  out.mc_se << se_t, se_p;
  return out;
}

double DensityGrid::mass() const {
  const Index n1 = x1_grid.size();
  const Index n2 = x2_grid.size();
  double total = 0.0;
  for (Index a = 0; a + 1 < n1; ++a) {
    for (Index b = 0; b + 1 < n2; ++b) {
      const double cell = (x1_grid(a + 1) - x1_grid(a)) * (x2_grid(b + 1) - x2_grid(b));
      const double avg = 0.25 * (std::exp(log_h(a, b)) + std::exp(log_h(a + 1, b)) +
                                 std::exp(log_h(a, b + 1)) + std::exp(log_h(a + 1, b + 1)));
      total += cell * avg;
    }
  }
  return total;
}

namespace {

DensityGrid grid_for(const TiltedModel& model, const Vector& psi, const Vector& z, const GridSpec& g,
                     const ProjectionResult& pr, const std::string& label) {
  DensityGrid out;
  out.label = label;
  out.x1_grid = Vector::LinSpaced(g.n1, g.x1_lo, g.x1_hi);
  out.x2_grid = Vector::LinSpaced(g.n2, g.x2_lo, g.x2_hi);
  out.log_h.resize(g.n1, g.n2);
  const Vector theta = model.theta(psi);
  const Vector phi = model.phi(psi);
  Vector x(2);
  for (Index a = 0; a < g.n1; ++a) {
    for (Index b = 0; b < g.n2; ++b) {
      x << out.x1_grid(a), out.x2_grid(b);
      double v = -std::numeric_limits<double>::infinity();
      try {
        v = tilted_logdensity(model.density->logpdf(x, z, phi), pr.mu, model.moments->evaluate(x, z, theta),
                              pr.lambda);
      } catch (const DomainError&) {
        // zero density outside the support
      }
      out.log_h(a, b) = v;
    }
  }
  return out;
}

}  // namespace

std::pair<DensityGrid, DensityGrid> counterfactual_grid(const TiltedModel& model, const Vector& psi_base,
                                                        const Vector& psi_new, const Vector& z,
                                                        const GridSpec& grid,
                                                        const CounterfactualOptions& options) {
  model.validate();
  require_dim(model.density->x_dim() == 2, "counterfactual_grid: needs a bivariate outcome");
  require_dim(grid.n1 >= 2 && grid.n2 >= 2, "counterfactual_grid: need at least two points per axis");
  if (!(grid.x1_lo < grid.x1_hi && grid.x2_lo < grid.x2_hi)) {
    throw InvalidParameter("counterfactual_grid: empty grid box");
  }
  RandomStream rng(options.seed);
  const Matrix noise = draw_noise(options.n_sim, model.density->noise_dim(), rng);
  const TiltedDraws base = tilt_draws(model, psi_base, z, noise, options.solver);
  const TiltedDraws next = tilt_draws(model, psi_new, z, noise, options.solver);
  return {grid_for(model, psi_base, z, grid, base.projection, "base"),
          grid_for(model, psi_new, z, grid, next.projection, "counterfactual")};
}

TiltedSummary tilted_summary(const TiltedModel& model, const Vector& psi, const Vector& z,
                             const CounterfactualOptions& options) {
  model.validate();
  RandomStream rng(options.seed);
  const Matrix noise = draw_noise(options.n_sim, model.density->noise_dim(), rng);
  const TiltedDraws td = tilt_draws(model, psi, z, noise, options.solver);
  TiltedSummary out;
  out.mean = td.draws.transpose() * td.weights;
  const Matrix c = td.draws.rowwise() - out.mean.transpose();
  out.cov = c.transpose() * td.weights.asDiagonal() * c;
  out.corr = out.cov.rows() >= 2 ? out.cov(0, 1) / std::sqrt(out.cov(0, 0) * out.cov(1, 1)) : 0.0;
  out.lambda = td.projection.lambda;
  out.mu = td.projection.mu;
  return out;
}

void CrraDesign::validate() const {
  if (!(sd_c > 0.0) || !(sd_r > 0.0)) throw InvalidParameter("crra design: standard deviations must be positive");
  if (!(std::abs(corr) < 1.0)) throw InvalidParameter("crra design: corr must lie in (-1, 1)");
  if (!(beta > 0.0)) throw InvalidParameter("crra design: beta must be positive");
  require_dim(z.size() == 2, "crra design: z must have two entries");
  if (!(z(0) > 0.0)) throw InvalidParameter("crra design: current consumption must be positive");
}

TiltedModel crra_model(Index n_sim) {
  TiltedModel m;
  m.density = std::make_shared<GaussianVarDensity>(2, 2);
  m.moments = std::make_shared<EulerCrra>();
  m.n_sim = n_sim;
  return m;
}

Vector crra_psi(const CrraDesign& d, double gamma) {
  d.validate();
  const GaussianVarDensity g(2, 2);
  GaussianVarParams p;
  p.intercept = Vector(2);
  p.intercept << d.mean_c, d.mean_r;
  p.transition = Matrix::Zero(2, 2);
  p.chol_cov = Matrix::Zero(2, 2);
  p.chol_cov(0, 0) = d.sd_c;
  p.chol_cov(1, 0) = d.corr * d.sd_r;
  p.chol_cov(1, 1) = d.sd_r * std::sqrt(1.0 - d.corr * d.corr);
  const Vector phi = g.pack(p);
  Vector psi(2 + phi.size());
  psi << d.beta, gamma, phi;
  return psi;
}

}  // namespace tiltlik
