#include "tiltlik/projection.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace tiltlik {

void SolverOptions::validate() const {
  if (!(tol_grad > 0.0)) throw InvalidParameter("SolverOptions: tol_grad must be positive");
  if (max_iter < 1) throw InvalidParameter("SolverOptions: max_iter must be at least 1");
  if (!(ridge >= 0.0)) throw InvalidParameter("SolverOptions: ridge must be non-negative");
  if (!(mu_cap > 0.0)) throw InvalidParameter("SolverOptions: mu_cap must be positive");
  if (!(line_search.shrink > 0.0 && line_search.shrink < 1.0)) {
    throw InvalidParameter("SolverOptions: line-search shrink must lie in (0, 1)");
  }
  if (!(line_search.sufficient_decrease > 0.0 && line_search.sufficient_decrease < 0.5)) {
    throw InvalidParameter("SolverOptions: sufficient decrease must lie in (0, 0.5)");
  }
  if (line_search.max_shrinks < 1) throw InvalidParameter("SolverOptions: max_shrinks must be >= 1");
}

const char* to_string(ProjectionStatus status) {
  switch (status) {
    case ProjectionStatus::converged: return "converged";
    case ProjectionStatus::max_iter: return "max_iter";
    case ProjectionStatus::no_interior: return "no_interior";
  }
  return "unknown";
}

namespace {

// Moment samples with optional base log-weights. Scalar moments take a
// fused path; the results are the same either way.
class TiltKernel {
 public:
  TiltKernel(const Matrix& m, const Vector* lw) : m_(m), lw_(lw), scalar_(m.cols() == 1) {
    if (scalar_) {
      m_max_ = m.col(0).maxCoeff();
      m_min_ = m.col(0).minCoeff();
    }
  }

  Index size() const { return m_.rows(); }
  Index dim() const { return m_.cols(); }

  // e_j = exp(s_j - shift) with s_j = mu'm_j + lw_j; returns log T0(mu).
  double evaluate(const Vector& mu, Vector& e) const {
    double shift;
    if (scalar_ && lw_ == nullptr) {
      const double u = mu(0);
      shift = u >= 0.0 ? u * m_max_ : u * m_min_;
      e = (u * m_.col(0).array() - shift).exp();
    } else {
      Vector s = m_ * mu;
      if (lw_ != nullptr) s += *lw_;
      shift = s.maxCoeff();
      e = (s.array() - shift).exp();
    }
    return shift + std::log(e.sum()) + log_scale_;
  }

  // Moments of m under the weights e / sum(e).
  void moments(const Vector& e, Vector& g, Matrix& h) const {
    const double inv = 1.0 / e.sum();
    if (scalar_) {
      const auto mc = m_.col(0).array();
      const auto ea = e.array();
      g(0) = (ea * mc).sum() * inv;
      h(0, 0) = (ea * mc.square()).sum() * inv;
    } else {
      g.noalias() = inv * (m_.transpose() * e);
      h.noalias() = inv * (m_.transpose() * e.asDiagonal() * m_);
    }
  }

  // max_j d'm_j
  double ray_max(const Vector& d) const {
    if (scalar_) return d(0) >= 0.0 ? d(0) * m_max_ : d(0) * m_min_;
    return (m_ * d).maxCoeff();
  }

  void set_log_scale(double v) { log_scale_ = v; }

 private:
  const Matrix& m_;
  const Vector* lw_;
  bool scalar_;
  double m_max_ = 0.0;
  double m_min_ = 0.0;
  double log_scale_ = 0.0;  // -log N_s for equal weights
};

ProjectionResult solve_impl(const Matrix& m, const Vector* lw_raw, const SolverOptions& opt) {
  opt.validate();
  const Index n = m.rows();
  const Index k = m.cols();
  require_dim(k >= 1, "solve_multipliers: moment dimension must be positive");
  require_dim(n >= k + 1, "solve_multipliers: need at least m_dim + 1 samples");
  if (!m.allFinite()) throw InvalidParameter("solve_multipliers: moment samples must be finite");

  // Base weights are normalized so that T0(0) = 1.
  Vector lw;
  if (lw_raw != nullptr) {
    require_dim(lw_raw->size() == n, "solve_multipliers: log-weight length differs from sample count");
    if (!lw_raw->allFinite()) throw InvalidParameter("solve_multipliers: log-weights must be finite");
    const double lw_max = lw_raw->maxCoeff();
    const double lw_norm = lw_max + std::log((lw_raw->array() - lw_max).exp().sum());
    lw = lw_raw->array() - lw_norm;
  }
  TiltKernel kernel(m, lw_raw != nullptr ? &lw : nullptr);
  if (lw_raw == nullptr) kernel.set_log_scale(-std::log(static_cast<double>(n)));

  const double tau = opt.ridge;
  const auto& ls = opt.line_search;

  ProjectionResult res;
  res.mu = Vector::Zero(k);
  Vector e;
  double log_t0 = kernel.evaluate(res.mu, e);
  // Objective values are compared relative to T0 at the current iterate,
  // so nothing overflows for large |mu|.
  res.objective_trace.push_back(std::exp(log_t0) + tau * res.mu.squaredNorm());

  Vector gbar(k);
  Matrix hbar(k, k);
  Vector e_trial;
  for (int it = 0;; ++it) {
    // grad T0 / T0 and Hess T0 / T0 at the current iterate.
    kernel.moments(e, gbar, hbar);

    const double t0 = std::exp(log_t0);
    Vector grad = gbar;
    Matrix hess = hbar;
    if (tau > 0.0) {
      grad += (2.0 * tau / t0) * res.mu;
      hess.diagonal().array() += 2.0 * tau / t0;
    }
    res.grad_norm = grad.norm();
    res.iterations = it;
    if (res.grad_norm <= opt.tol_grad) {
      res.status = ProjectionStatus::converged;
      break;
    }
    if (it >= opt.max_iter) {
      res.status = ProjectionStatus::max_iter;
      break;
    }

    Vector d;
    if (k == 1) {
      if (hess(0, 0) > 0.0) d = Vector::Constant(1, -grad(0) / hess(0, 0));
    } else {
      Eigen::LDLT<Matrix> ldlt(hess);
      if (ldlt.info() == Eigen::Success && ldlt.isPositive()) d = -ldlt.solve(grad);
    }
    if (d.size() != k || !d.allFinite() || grad.dot(d) >= 0.0) {
      // Degenerate curvature: the samples span a lower-dimensional set.
      d = -grad;
    }

    if (tau == 0.0 && kernel.ray_max(d) <= 0.0) {
      // T0 decreases without bound along the ray mu + t d.
      res.status = ProjectionStatus::no_interior;
      break;
    }

    const double slope = grad.dot(d);
    const double base = 1.0 + tau * res.mu.squaredNorm() / t0;
    // A predicted decrease below the rounding level of the objective cannot
    // be tested; the full step is taken.
    const bool testable = -slope > 1e-13;
    double alpha = 1.0;
    bool accepted = false;
    for (int shrink = 0; shrink < ls.max_shrinks; ++shrink) {
      const Vector cand = res.mu + alpha * d;
      const double log_t_new = kernel.evaluate(cand, e_trial);
      const double value = std::exp(log_t_new - log_t0) + tau * cand.squaredNorm() / t0;
      if (std::isfinite(value) && (!testable || value <= base + ls.sufficient_decrease * alpha * slope)) {
        res.mu = cand;
        e.swap(e_trial);
        log_t0 = log_t_new;
        accepted = true;
        break;
      }
      alpha *= ls.shrink;
    }
    if (!accepted || res.mu.norm() > opt.mu_cap) {
      res.status = ProjectionStatus::no_interior;
      break;
    }
    res.objective_trace.push_back(std::exp(log_t0) + tau * res.mu.squaredNorm());
  }

  res.converged = res.status == ProjectionStatus::converged;
  res.lambda = -log_t0;
  res.weights = e / e.sum();
  return res;
}

}  // namespace

ProjectionResult try_solve_multipliers_weighted(const Matrix& m_samples, const Vector& log_weights,
                                                const SolverOptions& options) {
  return solve_impl(m_samples, &log_weights, options);
}

ProjectionResult try_solve_multipliers(const Matrix& m_samples, const SolverOptions& options) {
  return solve_impl(m_samples, nullptr, options);
}

ProjectionResult solve_multipliers_weighted(const Matrix& m_samples, const Vector& log_weights,
                                            const SolverOptions& options) {
  ProjectionResult res = try_solve_multipliers_weighted(m_samples, log_weights, options);
  if (res.status == ProjectionStatus::no_interior) {
    throw NoInteriorSolution("solve_multipliers: zero is not interior to the hull of the moments");
  }
  return res;
}

ProjectionResult solve_multipliers(const Matrix& m_samples, const SolverOptions& options) {
  ProjectionResult res = try_solve_multipliers(m_samples, options);
  if (res.status == ProjectionStatus::no_interior) {
    throw NoInteriorSolution("solve_multipliers: zero is not interior to the hull of the moments");
  }
  return res;
}

double gaussian_tilt_root(double k) {
  if (!std::isfinite(k)) throw InvalidParameter("gaussian_tilt_root: k must be finite");
  if (k == 0.0) return 0.0;
  // (-1 + sqrt(1 + 4k^2)) / (2k), written without cancellation for small k.
  return 2.0 * k / (1.0 + std::sqrt(1.0 + 4.0 * k * k));
}

double analytic_gaussian_tilt(double c_t, double r_t, double beta, double rho_c, double rho_r) {
  if (!(beta > 0.0)) throw InvalidParameter("analytic_gaussian_tilt: beta must be positive");
  const double k = (c_t / beta) * (1.0 - r_t * beta * rho_c * rho_r);
  return gaussian_tilt_root(k);
}

double tilted_logdensity(double base_logpdf, const Vector& mu, const Vector& m_value,
                         double lambda) {
  require_dim(mu.size() == m_value.size(), "tilted_logdensity: mu and m differ in length");
  return base_logpdf + mu.dot(m_value) + lambda;
}

}  // namespace tiltlik
