#pragma once

#include "tiltlik/types.hpp"

#include <functional>
#include <vector>

namespace tiltlik {

struct NelderMeadOptions {
  double initial_step = 0.1;  // simplex edge along each coordinate
  double xatol = 1e-6;
  double fatol = 1e-10;
  /// Evaluation budget; 0 means 2000 * dim.
  int max_evaluations = 0;
};

struct NelderMeadResult {
  Vector x;
  double value = 0.0;
  int evaluations = 0;
  int iterations = 0;
  bool converged = false;
  /// Best value after each iteration (non-increasing).
  std::vector<double> best_trace;
};

/// Minimizes f by the Nelder-Mead simplex method (standard coefficients
/// 1, 2, 1/2, 1/2). Non-finite values are treated as +infinity.
NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& f, const Vector& x0,
                             const NelderMeadOptions& options = {});

/// Minimizes a scalar function on [lo, hi] by golden-section search
/// refined with parabolic steps (Brent). Returns the minimizer.
double brent_minimize(const std::function<double(double)>& f, double lo, double hi,
                      double tol = 1e-10, int max_iter = 200);

}  // namespace tiltlik
