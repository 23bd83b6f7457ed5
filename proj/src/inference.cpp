#include "tiltlik/inference.hpp"

#include "tiltlik/parallel.hpp"

#include <cmath>
#include <vector>

namespace tiltlik {

namespace {

Matrix centered_cross(const Matrix& a, const Matrix& b) {
  const Matrix ac = a.rowwise() - a.colwise().mean();
  const Matrix bc = b.rowwise() - b.colwise().mean();
  return ac.transpose() * bc / static_cast<double>(a.rows());
}

Matrix spd_inverse(const Matrix& a, const char* what) {
  const Matrix sym = 0.5 * (a + a.transpose());
  Eigen::LLT<Matrix> llt(sym);
  if (llt.info() != Eigen::Success) throw SingularMatrix(std::string(what) + " is not positive definite");
  // Reject numerically rank-deficient input as well.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  const Vector& ev = eig.eigenvalues();
  if (!(ev.minCoeff() > 1e-10 * ev.maxCoeff())) {
    throw SingularMatrix(std::string(what) + " is numerically singular");
  }
  Matrix inv = llt.solve(Matrix::Identity(a.rows(), a.cols()));
  return 0.5 * (inv + inv.transpose());
}

}  // namespace

ConditionalMoments conditional_moments(const TiltedModel& model, const Vector& z, const Vector& psi,
                                       Index n_sim, RandomStream rng) {
  const Vector theta = model.theta(psi);
  const Vector phi = model.phi(psi);
  const Matrix x = model.density->simulate(z, phi, n_sim, rng);
  const Matrix m = model.moments->evaluate_draws(x, z, theta);
  const Matrix jac = model.moments->jacobian_draws(x, z, theta);
  const Matrix s = model.density->score_draws(x, z, phi);

  const Index md = model.moments->m_dim();
  const Index td = model.theta_dim();
  ConditionalMoments out;
  const Vector jac_mean = jac.colwise().mean().transpose();
  out.mean_jacobian.resize(md, td);
  for (Index a = 0; a < md; ++a) out.mean_jacobian.row(a) = jac_mean.segment(a * td, td).transpose();
  out.var_m = centered_cross(m, m);
  out.cov_m_score = centered_cross(m, s);
  out.var_score = centered_cross(s, s);
  return out;
}

Vector CovarianceBlocks::theta_se(Index n_obs) const {
  return (theta_block.diagonal() / static_cast<double>(n_obs)).array().sqrt().matrix();
}

Vector CovarianceBlocks::phi_se(Index n_obs) const {
  return (phi_block.diagonal() / static_cast<double>(n_obs)).array().sqrt().matrix();
}

CovarianceBlocks asymptotic_covariance(const TiltedModel& model, const Sample& sample,
                                       const Vector& psi_hat, const InferenceOptions& options) {
  model.validate();
  require_dim(psi_hat.size() == model.psi_dim(), "asymptotic_covariance: psi has wrong length");
  const Index n = sample.size();
  const Index td = model.theta_dim();
  const Index pd = model.phi_dim();
  std::vector<Matrix> theta_info(static_cast<std::size_t>(n));
  std::vector<Matrix> phi_info(static_cast<std::size_t>(n));
  std::vector<Matrix> score_info(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), options.threads, [&](std::size_t i) {
    const auto cm = conditional_moments(model, sample.z_row(static_cast<Index>(i)), psi_hat, options.n_sim,
                                        RandomStream::derive(options.seed, {static_cast<std::uint64_t>(i)}));
    Eigen::LDLT<Matrix> v(cm.var_m);
    if (v.info() != Eigen::Success || !v.isPositive() || !(v.vectorD().minCoeff() > 0.0)) {
      throw SingularMatrix("asymptotic_covariance: conditional moment variance is singular");
    }
    theta_info[i] = cm.mean_jacobian.transpose() * v.solve(cm.mean_jacobian);
    phi_info[i] = cm.var_score - cm.cov_m_score.transpose() * v.solve(cm.cov_m_score);
    score_info[i] = cm.var_score;
  });
  Matrix ti = Matrix::Zero(td, td), pi = Matrix::Zero(pd, pd), si = Matrix::Zero(pd, pd);
  for (std::size_t i = 0; i < theta_info.size(); ++i) {
    ti += theta_info[i];
    pi += phi_info[i];
    si += score_info[i];
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  CovarianceBlocks out;
  out.theta_block = spd_inverse(ti * inv_n, "theta information");
  out.phi_block = pd > 0 ? spd_inverse(pi * inv_n, "phi information") : Matrix(0, 0);
  out.score_information = si * inv_n;
  out.n_used = n;
  return out;
}

FocBlocks foc_blocks(const TiltedModel& model, const Sample& sample, const Vector& psi,
                     const InferenceOptions& options) {
  model.validate();
  const Index n = sample.size();
  const Vector theta = model.theta(psi);
  const Vector phi = model.phi(psi);
  std::vector<Vector> g1(static_cast<std::size_t>(n)), g2(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), options.threads, [&](std::size_t i) {
    const Index ii = static_cast<Index>(i);
    const Vector z = sample.z_row(ii);
    const Vector x = sample.x_row(ii);
    const auto cm = conditional_moments(model, z, psi, options.n_sim,
                                        RandomStream::derive(options.seed, {static_cast<std::uint64_t>(i)}));
    Eigen::LDLT<Matrix> v(cm.var_m);
    const Vector vm = v.solve(model.moments->evaluate(x, z, theta));
    g1[i] = -cm.mean_jacobian.transpose() * vm;
    g2[i] = model.density->score(x, z, phi) - cm.cov_m_score.transpose() * vm;
  });
  FocBlocks out{Vector::Zero(model.theta_dim()), Vector::Zero(model.phi_dim())};
  for (std::size_t i = 0; i < g1.size(); ++i) {
    out.g1 += g1[i];
    out.g2 += g2[i];
  }
  out.g1 /= static_cast<double>(n);
  out.g2 /= static_cast<double>(n);
  return out;
}

}  // namespace tiltlik
