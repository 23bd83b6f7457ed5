#pragma once

#include "oracles.hpp"
#include "tiltlik/density.hpp"
#include "tiltlik/moments.hpp"
#include "tiltlik/tilted_estimator.hpp"

#include <doctest.h>

#include <cmath>
#include <memory>

namespace testutil {

using namespace tiltlik;

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index k = 0;
  for (double x : v) out(k++) = x;
  return out;
}

/// Bivariate Gaussian base with means (rho_c C, rho_R R) and identity
/// covariance; phi = (rho_c, rho_R).
inline std::shared_ptr<GaussianVarDensity> section_two_base() {
  AffineMapBuilder b(GaussianVarDensity::full_dim(2, 2), 2);
  b.fix(0, 0.0).fix(1, 0.0).bind(2, 0).fix(3, 0.0).fix(4, 0.0).bind(5, 1);
  b.fix(6, 0.0).fix(7, 0.0).fix(8, 0.0);
  return std::make_shared<GaussianVarDensity>(2, 2, b.build());
}

}  // namespace testutil
