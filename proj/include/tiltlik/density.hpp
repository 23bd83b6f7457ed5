#pragma once

#include "tiltlik/rng.hpp"
#include "tiltlik/types.hpp"

#include <string>

namespace tiltlik {

/// Affine map from a reduced parameter vector to a family's full layout:
/// full = offset + jacobian * reduced. Fixed entries live in the offset,
/// tied entries share a column.
struct AffineMap {
  Vector offset;
  Matrix jacobian;

  static AffineMap identity(Index n);
  Index full_dim() const { return offset.size(); }
  Index reduced_dim() const { return jacobian.cols(); }
  Vector apply(const Vector& reduced) const;
};

/// Incremental construction of an AffineMap slot by slot.
class AffineMapBuilder {
 public:
  AffineMapBuilder(Index full_dim, Index reduced_dim);
  AffineMapBuilder& fix(Index slot, double value);
  AffineMapBuilder& bind(Index slot, Index reduced_index, double scale = 1.0);
  AffineMap build() const { return map_; }

 private:
  AffineMap map_;
};

/// Parametric conditional density f(x | z, phi): simulation, log-density
/// and score in phi.
///
/// Instances are immutable and safe to share across threads; random
/// streams are always supplied by the caller.
class ConditionalDensity {
 public:
  virtual ~ConditionalDensity() = default;

  virtual std::string name() const = 0;
  virtual Index param_dim() const = 0;
  virtual Index x_dim() const = 0;
  virtual Index z_dim() const = 0;

  virtual double logpdf(const Vector& x, const Vector& z, const Vector& phi) const = 0;

  /// sum_i logpdf(x_i, z_i, phi) over matching rows of x and z.
  virtual double sum_logpdf(const Matrix& x, const Matrix& z, const Vector& phi) const;

  /// Number of standard-normal inputs consumed per draw.
  virtual Index noise_dim() const { return x_dim(); }

  /// Maps standard-normal noise (n x noise_dim) to draws (n x x_dim).
  /// Keeping noise fixed while phi moves gives common random numbers.
  virtual Matrix transform_noise(const Vector& z, const Vector& phi, const Matrix& noise) const = 0;

  /// n draws from f(. | z, phi). Draw j consumes the j-th block of
  /// noise_dim normals, so shorter runs are prefixes of longer ones.
  Matrix simulate(const Vector& z, const Vector& phi, Index n, RandomStream& rng) const;

  /// Gradient of logpdf in phi. The default is a central difference with
  /// step 1e-6 * max(1, |phi_k|).
  virtual Vector score(const Vector& x, const Vector& z, const Vector& phi) const;

  Vector finite_difference_score(const Vector& x, const Vector& z, const Vector& phi) const;

  /// Scores for every row of x at one conditioning value (rows x param_dim).
  virtual Matrix score_draws(const Matrix& x, const Vector& z, const Vector& phi) const;

 protected:
  void check_dims(const Vector& x, const Vector& z, const Vector& phi) const;
};

/// Standard normal noise laid out for ConditionalDensity::transform_noise.
Matrix draw_noise(Index n, Index noise_dim, RandomStream& rng);

struct GaussianVarParams {
  Vector intercept;   // x_dim
  Matrix transition;  // x_dim x z_dim
  Matrix chol_cov;    // x_dim x x_dim, lower triangular

  void validate() const;
  Matrix covariance() const { return chol_cov * chol_cov.transpose(); }
};

enum class DiagonalCoding {
  log,  // full-layout slot holds log L_kk (any real value is admissible)
  raw,  // slot holds L_kk itself, must be > 0
};

/// Gaussian VAR(1): x | z ~ N(intercept + transition z, L L').
///
/// Full parameter layout: intercept, then transition row-major, then the
/// lower triangle of L row by row. The public phi is mapped onto this
/// layout through an AffineMap.
class GaussianVarDensity : public ConditionalDensity {
 public:
  GaussianVarDensity(Index x_dim, Index z_dim, DiagonalCoding coding = DiagonalCoding::log);
  GaussianVarDensity(Index x_dim, Index z_dim, AffineMap map,
                     DiagonalCoding coding = DiagonalCoding::log);

  std::string name() const override { return "gaussian_var"; }
  Index param_dim() const override { return map_.reduced_dim(); }
  Index x_dim() const override { return x_dim_; }
  Index z_dim() const override { return z_dim_; }

  static Index full_dim(Index x_dim, Index z_dim) {
    return x_dim + x_dim * z_dim + x_dim * (x_dim + 1) / 2;
  }
  Index intercept_slot(Index k) const { return k; }
  Index transition_slot(Index row, Index col) const { return x_dim_ + row * z_dim_ + col; }
  Index chol_slot(Index row, Index col) const;

  const AffineMap& map() const { return map_; }
  DiagonalCoding coding() const { return coding_; }

  /// Full-layout vector for a parameter set (map not applied).
  Vector pack(const GaussianVarParams& params) const;
  GaussianVarParams unpack_full(const Vector& full) const;
  GaussianVarParams params(const Vector& phi) const;

  double logpdf(const Vector& x, const Vector& z, const Vector& phi) const override;
  double sum_logpdf(const Matrix& x, const Matrix& z, const Vector& phi) const override;
  Matrix transform_noise(const Vector& z, const Vector& phi, const Matrix& noise) const override;
  Vector score(const Vector& x, const Vector& z, const Vector& phi) const override;
  Matrix score_draws(const Matrix& x, const Vector& z, const Vector& phi) const override;

  /// Conditional mean intercept + transition z.
  Vector mean(const Vector& z, const Vector& phi) const;

 protected:
  double gaussian_logpdf(const Vector& y, const Vector& w, const GaussianVarParams& p) const;
  double gaussian_sum_logpdf(const Matrix& y, const Matrix& w, const GaussianVarParams& p) const;
  Vector gaussian_full_score(const Vector& y, const Vector& w, const GaussianVarParams& p) const;
  Matrix gaussian_score_draws(const Matrix& y, const Vector& w, const GaussianVarParams& p) const;
  Vector reduce_score(const Vector& full_score) const;

 private:
  Index x_dim_;
  Index z_dim_;
  AffineMap map_;
  DiagonalCoding coding_;
};

/// Log-normal VAR: log x | log z ~ Gaussian VAR. Data, conditioning values
/// and draws are all in levels; the log transform is internal.
class LogNormalVarDensity : public GaussianVarDensity {
 public:
  using GaussianVarDensity::GaussianVarDensity;

  std::string name() const override { return "lognormal_var"; }

  double logpdf(const Vector& x, const Vector& z, const Vector& phi) const override;
  double sum_logpdf(const Matrix& x, const Matrix& z, const Vector& phi) const override;
  Matrix transform_noise(const Vector& z, const Vector& phi, const Matrix& noise) const override;
  Vector score(const Vector& x, const Vector& z, const Vector& phi) const override;
  Matrix score_draws(const Matrix& x, const Vector& z, const Vector& phi) const override;

  static Vector log_levels(const Vector& v, const char* what);
};

}  // namespace tiltlik
