#pragma once

#include "tiltlik/tilted_estimator.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <utility>

namespace tiltlik {

/// Scalar function of the outcome whose tilted expectation is studied.
struct Target {
  std::string name;
  std::function<double(const Vector& x)> fn;
};

struct CounterfactualOptions {
  Index n_sim = 100000;
  std::uint64_t seed = 0;
  SolverOptions solver;
};

/// Draws at one z with their exponential-tilt weights.
struct TiltedDraws {
  Matrix draws;
  Vector weights;  // normalized tilted weights
  ProjectionResult projection;
};

/// Tilt of the draws transform_noise(z, phi, noise). Throws
/// NoInteriorSolution when the projection is infeasible.
TiltedDraws tilt_draws(const TiltedModel& model, const Vector& psi, const Vector& z, const Matrix& noise,
                       const SolverOptions& solver = {});

/// Tilt at psi of draws simulated at phi0, importance-weighted by
/// f(x | z, phi) / f(x | z, phi0).
TiltedDraws reweighted_tilt(const TiltedModel& model, const Vector& psi, const Vector& z,
                            const Matrix& draws, const Vector& phi0, const SolverOptions& solver = {});

struct EffectReport {
  Vector d_dtheta;
  Vector d_dphi;
  std::string target_name;
  Vector z;
  /// Monte Carlo standard errors, theta entries first.
  Vector mc_se;
  double target_mean = 0.0;
  Vector mu;
  double lambda = 0.0;
  /// True when the target is constant on the draws; all effects are then 0.
  bool constant_target = false;
};

/// Derivatives of E_H[target | z] in theta and phi:
///   d/dtheta = Cov_H(target, m'mu_theta + mu'M),  mu_theta = -E_H[mm']^{-1} E_H[M + m mu'M]
///   d/dphi   = Cov_H(target, s + m'mu_phi),        mu_phi   = -E_H[mm']^{-1} E_H[m s']
/// all under one tilted sample of draws from f(. | z, phi).
EffectReport average_effect(const TiltedModel& model, const Vector& psi, const Vector& z,
                            const Target& target, const CounterfactualOptions& options = {});

struct GridSpec {
  double x1_lo = 0.0, x1_hi = 1.0;
  Index n1 = 50;
  double x2_lo = 0.0, x2_hi = 1.0;
  Index n2 = 50;
};

struct DensityGrid {
  Vector x1_grid;
  Vector x2_grid;
  Matrix log_h;  // n1 x n2
  std::string label;

  /// Trapezoid integral of exp(log_h) over the grid box.
  double mass() const;
};

/// log h = log f + mu'm + lambda on a grid for two values of psi. Both
/// projections use the same noise, so differences are not simulation noise.
std::pair<DensityGrid, DensityGrid> counterfactual_grid(const TiltedModel& model, const Vector& psi_base,
                                                        const Vector& psi_new, const Vector& z,
                                                        const GridSpec& grid,
                                                        const CounterfactualOptions& options = {});

/// Tilted mean, covariance and correlation of a bivariate outcome.
struct TiltedSummary {
  Vector mean;
  Matrix cov;
  double corr = 0.0;
  double lambda = 0.0;
  Vector mu;
};

TiltedSummary tilted_summary(const TiltedModel& model, const Vector& psi, const Vector& z,
                             const CounterfactualOptions& options = {});

/// Gaussian base for next-period (C, R) with constant mean and covariance,
/// tilted by the CRRA Euler equation with C_now = z(0).
struct CrraDesign {
  double mean_c = 1.0;
  double mean_r = 1.03;
  double sd_c = 0.05;
  double sd_r = 0.05;
  double corr = -0.5;
  double beta = 0.99;
  Vector z = Vector::Constant(2, 1.0);

  void validate() const;
};

/// Model with psi = (beta, gamma, phi) and phi the free Gaussian VAR layout.
TiltedModel crra_model(Index n_sim = 0);
Vector crra_psi(const CrraDesign& design, double gamma);

}  // namespace tiltlik
