#include "tiltlik/baselines.hpp"

#include <cmath>
#include <limits>
#include <utility>

namespace tiltlik {

Vector InstrumentedMoments::g(const Vector& x, const Vector& z, const Vector& theta) const {
  const Vector m = base->evaluate(x, z, theta);
  const Vector w = instruments(z);
  require_dim(w.size() == n_inst, "instrument rule returned the wrong length");
  Vector out(g_dim());
  for (Index a = 0; a < m.size(); ++a) out.segment(a * n_inst, n_inst) = m(a) * w;
  return out;
}

Matrix InstrumentedMoments::g_matrix(const Sample& sample, const Vector& theta) const {
  Matrix out(sample.size(), g_dim());
  for (Index i = 0; i < sample.size(); ++i) out.row(i) = g(sample.x_row(i), sample.z_row(i), theta).transpose();
  return out;
}

InstrumentedMoments default_instruments(MomentPtr base) {
  const Index k = base->z_dim();
  InstrumentedMoments im{std::move(base), nullptr, k + 1};
  im.instruments = [k](const Vector& z) {
    Vector w(k + 1);
    w(0) = 1.0;
    w.tail(k) = z;
    return w;
  };
  return im;
}

InstrumentedMoments constant_instrument(MomentPtr base) {
  return InstrumentedMoments{std::move(base), [](const Vector&) { return Vector::Ones(1); }, 1};
}

double cu_gmm_objective(const Matrix& g, double pinv_cutoff) {
  const Index n = g.rows();
  require_dim(n > g.cols(), "cu_gmm: need more observations than moments");
  const Vector gbar = g.colwise().mean().transpose();
  if (gbar.isZero(0.0)) return 0.0;
  const Matrix centered = g.rowwise() - gbar.transpose();
  const Matrix w = centered.transpose() * centered / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(w);
  if (eig.info() != Eigen::Success) throw NumericalError("cu_gmm: eigen-decomposition failed");
  const Vector& ev = eig.eigenvalues();
  const double top = ev.maxCoeff();
  if (!(top > 0.0)) throw SingularMatrix("cu_gmm: moment covariance is zero");
  const Vector proj = eig.eigenvectors().transpose() * gbar;
  double q = 0.0;
  for (Index k = 0; k < ev.size(); ++k) {
    if (ev(k) > pinv_cutoff * top) q += proj(k) * proj(k) / ev(k);
  }
  return q;
}

double etel_objective(const Matrix& g, const SolverOptions& solver) {
  const ProjectionResult pr = try_solve_multipliers(g, solver);
  if (!pr.converged) return -std::numeric_limits<double>::infinity();
  // log w_i = mu'g_i + lambda - log N
  const double n = static_cast<double>(g.rows());
  return (g * pr.mu).mean() + pr.lambda - std::log(n);
}

namespace {

BaselineResult minimize_theta(const std::function<double(const Vector&)>& loss, const Vector& init,
                              const BaselineOptions& options) {
  std::vector<ParamTransform> t = options.transforms;
  if (t.empty()) t.resize(static_cast<std::size_t>(init.size()));
  require_dim(static_cast<Index>(t.size()) == init.size(), "baseline: transform count differs from theta");
  auto to_theta = [&](const Vector& u) {
    Vector th(u.size());
    for (Index k = 0; k < u.size(); ++k) th(k) = t[static_cast<std::size_t>(k)].to_param(u(k));
    return th;
  };
  Vector u0(init.size());
  for (Index k = 0; k < init.size(); ++k) u0(k) = t[static_cast<std::size_t>(k)].to_internal(init(k));
  auto f = [&](const Vector& u) {
    try {
      return loss(to_theta(u));
    } catch (const DomainError&) {
      return std::numeric_limits<double>::infinity();
    } catch (const SingularMatrix&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  const NelderMeadResult nm = nelder_mead(f, u0, options.optimizer);
  BaselineResult r;
  r.theta = to_theta(nm.x);
  r.objective = nm.value;
  r.converged = nm.converged && std::isfinite(nm.value);
  r.evaluations = nm.evaluations;
  return r;
}

}  // namespace

BaselineResult estimate_cu_gmm(const Sample& sample, const InstrumentedMoments& im, const Vector& init,
                               const BaselineOptions& options) {
  require_dim(sample.size() > im.g_dim(), "cu_gmm: need more observations than moments");
  return minimize_theta(
      [&](const Vector& th) { return cu_gmm_objective(im.g_matrix(sample, th), options.pinv_cutoff); },
      init, options);
}

BaselineResult estimate_etel(const Sample& sample, const InstrumentedMoments& im, const Vector& init,
                             const BaselineOptions& options) {
  require_dim(sample.size() > im.g_dim(), "etel: need more observations than moments");
  BaselineResult r = minimize_theta(
      [&](const Vector& th) { return -etel_objective(im.g_matrix(sample, th), options.solver); }, init,
      options);
  r.objective = -r.objective;
  return r;
}

}  // namespace tiltlik
