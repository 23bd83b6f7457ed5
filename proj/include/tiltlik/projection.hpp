#pragma once

#include "tiltlik/types.hpp"

#include <vector>

namespace tiltlik {

struct LineSearchOptions {
  double shrink = 0.5;
  double sufficient_decrease = 1e-4;
  int max_shrinks = 50;
};

struct SolverOptions {
  double tol_grad = 1e-10;  // on the normalized gradient |grad T| / T
  int max_iter = 200;
  double ridge = 0.0;       // tau in T(mu) + tau |mu|^2
  double mu_cap = 1e3;
  LineSearchOptions line_search;

  void validate() const;
};

enum class ProjectionStatus { converged, max_iter, no_interior };

const char* to_string(ProjectionStatus status);

/// Multipliers of the exponential tilt at one conditioning value.
struct ProjectionResult {
  Vector mu;
  double lambda = 0.0;
  /// Normalized tilt weights exp(mu'm_j + lambda) * base_weight_j; they sum to 1.
  Vector weights;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  ProjectionStatus status = ProjectionStatus::max_iter;
  /// Objective T(mu) after every accepted Newton step, starting at T(0) = 1.
  std::vector<double> objective_trace;
};

/// Minimizes T(mu) = mean_j exp(mu'm_j) + tau |mu|^2 over mu by damped
/// Newton from mu = 0 and sets lambda = -log mean_j exp(mu'm_j), so the
/// tilted weights are exactly normalized. Rows of m_samples are draws.
///
/// Throws NoInteriorSolution when 0 is not interior to the convex hull of
/// the rows. Returns converged = false when max_iter is hit.
ProjectionResult solve_multipliers(const Matrix& m_samples, const SolverOptions& options = {});

/// Same problem with base weights exp(log_weights_j) in place of 1/N_s,
/// e.g. quadrature nodes or importance weights. log_weights need not be
/// normalized.
ProjectionResult solve_multipliers_weighted(const Matrix& m_samples, const Vector& log_weights,
                                            const SolverOptions& options = {});

/// Non-throwing variants: status = no_interior instead of an exception.
ProjectionResult try_solve_multipliers(const Matrix& m_samples, const SolverOptions& options = {});
ProjectionResult try_solve_multipliers_weighted(const Matrix& m_samples, const Vector& log_weights,
                                                const SolverOptions& options = {});

/// Multiplier of the closed-form tilt of an uncorrelated unit-variance
/// bivariate normal by the quadratic-utility covariance restriction:
/// the root in (-1, 1) of mu / (1 - mu^2) = k with
/// k = (C_t / beta)(1 - R_t beta rho_c rho_R).
double analytic_gaussian_tilt(double c_t, double r_t, double beta, double rho_c, double rho_r);

/// Root in (-1, 1) of mu / (1 - mu^2) = k.
double gaussian_tilt_root(double k);

/// log h = log f + mu'm + lambda.
double tilted_logdensity(double base_logpdf, const Vector& mu, const Vector& m_value,
                         double lambda);

}  // namespace tiltlik
