#pragma once

#include "tiltlik/moments.hpp"
#include "tiltlik/optimize.hpp"
#include "tiltlik/projection.hpp"
#include "tiltlik/tilted_estimator.hpp"

#include <functional>
#include <vector>

namespace tiltlik {

/// Unconditional moments g_i = m(x_i, z_i, theta) (x) instr(z_i).
struct InstrumentedMoments {
  MomentPtr base;
  std::function<Vector(const Vector& z)> instruments;
  Index n_inst = 0;

  Index g_dim() const { return base->m_dim() * n_inst; }
  Index theta_dim() const { return base->theta_dim(); }
  Vector g(const Vector& x, const Vector& z, const Vector& theta) const;
  /// N x g_dim matrix of g_i.
  Matrix g_matrix(const Sample& sample, const Vector& theta) const;
};

/// Instruments (1, z_1, ..., z_k) in levels.
InstrumentedMoments default_instruments(MomentPtr base);
/// The constant instrument only.
InstrumentedMoments constant_instrument(MomentPtr base);

struct BaselineOptions {
  NelderMeadOptions optimizer;
  /// Per-coordinate transforms of theta; empty means identity.
  std::vector<ParamTransform> transforms;
  /// Relative eigenvalue cutoff for the pseudo-inverse of W.
  double pinv_cutoff = 1e-12;
  SolverOptions solver;
};

struct BaselineResult {
  Vector theta;
  double objective = 0.0;
  bool converged = false;
  int evaluations = 0;
};

/// gbar' W^+ gbar with W the centered sample covariance of g_i.
double cu_gmm_objective(const Matrix& g, double pinv_cutoff = 1e-12);

/// (1/N) sum_i log w_i for the exponential tilt of the empirical measure
/// that zeroes the mean of g; -infinity when zero is outside the hull.
double etel_objective(const Matrix& g, const SolverOptions& solver = {});

BaselineResult estimate_cu_gmm(const Sample& sample, const InstrumentedMoments& im,
                               const Vector& init, const BaselineOptions& options = {});

BaselineResult estimate_etel(const Sample& sample, const InstrumentedMoments& im,
                             const Vector& init, const BaselineOptions& options = {});

}  // namespace tiltlik
