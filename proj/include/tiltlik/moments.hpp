#pragma once

#include "tiltlik/types.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace tiltlik {

/// Conditional moment restriction m(x, z, theta) with E[m | z] = 0 at the
/// true theta. Moments always see level variables.
class MomentModel {
 public:
  virtual ~MomentModel() = default;

  virtual std::string name() const = 0;
  virtual Index theta_dim() const = 0;
  virtual Index m_dim() const = 0;
  virtual Index x_dim() const = 0;
  virtual Index z_dim() const = 0;

  virtual Vector evaluate(const Vector& x, const Vector& z, const Vector& theta) const = 0;

  /// d m / d theta (m_dim x theta_dim). Default: central differences.
  virtual Matrix jacobian(const Vector& x, const Vector& z, const Vector& theta) const;

  Matrix finite_difference_jacobian(const Vector& x, const Vector& z, const Vector& theta) const;

  /// Moments for every row of `draws` at one conditioning value
  /// (rows x m_dim). Override for vectorized evaluation.
  virtual Matrix evaluate_draws(const Matrix& draws, const Vector& z, const Vector& theta) const;

  /// Jacobians for every row of `draws`: row j holds d m / d theta of draw j
  /// flattened row-major (rows x m_dim * theta_dim).
  virtual Matrix jacobian_draws(const Matrix& draws, const Vector& z, const Vector& theta) const;

  /// Signs the tilt multipliers may take, one entry per moment: -1 when
  /// exp(mu m) is integrable only for mu <= 0 because m is unbounded above
  /// where the base puts mass, +1 for the mirror case, 0 when unrestricted.
  /// Empty means unrestricted everywhere. A sample of draws always has a
  /// finite moment generating function, so without this the simulated
  /// projection can return multipliers for which no exact tilt exists.
  virtual std::vector<int> multiplier_signs() const { return {}; }

 protected:
  void check_dims(const Vector& x, const Vector& z, const Vector& theta) const;
};

using MomentPtr = std::shared_ptr<const MomentModel>;

/// True when every multiplier has a sign the model admits.
bool admissible_multipliers(const MomentModel& model, const Vector& mu);

/// Log-utility Euler equation, x = (C_next, R_next), z = (C_now, R_now),
/// theta = (beta): beta * C_now * R_next / C_next - 1.
class EulerLogUtility final : public MomentModel {
 public:
  std::string name() const override { return "euler_log"; }
  Index theta_dim() const override { return 1; }
  Index m_dim() const override { return 1; }
  Index x_dim() const override { return 2; }
  Index z_dim() const override { return 2; }
  Vector evaluate(const Vector& x, const Vector& z, const Vector& theta) const override;
  Matrix jacobian(const Vector& x, const Vector& z, const Vector& theta) const override;
  Matrix evaluate_draws(const Matrix& draws, const Vector& z, const Vector& theta) const override;
  Matrix jacobian_draws(const Matrix& draws, const Vector& z, const Vector& theta) const override;
  /// 1 / C_next is unbounded as C_next -> 0.
  std::vector<int> multiplier_signs() const override { return {-1}; }
};

/// CRRA Euler equation, theta = (beta, gamma):
/// beta * R_next * (C_next / C_now)^(-gamma) - 1.
class EulerCrra final : public MomentModel {
 public:
  std::string name() const override { return "euler_crra"; }
  Index theta_dim() const override { return 2; }
  Index m_dim() const override { return 1; }
  Index x_dim() const override { return 2; }
  Index z_dim() const override { return 2; }
  Vector evaluate(const Vector& x, const Vector& z, const Vector& theta) const override;
  Matrix jacobian(const Vector& x, const Vector& z, const Vector& theta) const override;
  Matrix evaluate_draws(const Matrix& draws, const Vector& z, const Vector& theta) const override;
  Matrix jacobian_draws(const Matrix& draws, const Vector& z, const Vector& theta) const override;
  /// 1 / C_next is unbounded as C_next -> 0.
  std::vector<int> multiplier_signs() const override { return {-1}; }
};

/// Quadratic-utility Euler equation (marginal utility linear in C):
/// beta * R_next * C_next - C_now.
class EulerQuadratic final : public MomentModel {
 public:
  std::string name() const override { return "euler_quadratic"; }
  Index theta_dim() const override { return 1; }
  Index m_dim() const override { return 1; }
  Index x_dim() const override { return 2; }
  Index z_dim() const override { return 2; }
  Vector evaluate(const Vector& x, const Vector& z, const Vector& theta) const override;
  Matrix jacobian(const Vector& x, const Vector& z, const Vector& theta) const override;
};

/// The quadratic-utility Euler equation written as a restriction on the
/// conditional covariance with the base VAR means (rho_c C_now, rho_R R_now)
/// held fixed:
///   (C_next - rho_c C_now)(R_next - rho_R R_now) - (C_now / beta)(1 - R_now beta rho_c rho_R).
/// Exponentially tilting the uncorrelated unit-variance VAR with this moment
/// has a closed-form solution (see analytic_gaussian_tilt).
class QuadraticCovarianceRestriction final : public MomentModel {
 public:
  QuadraticCovarianceRestriction(double rho_c, double rho_r) : rho_c_(rho_c), rho_r_(rho_r) {}
  std::string name() const override { return "quadratic_covariance"; }
  Index theta_dim() const override { return 1; }
  Index m_dim() const override { return 1; }
  Index x_dim() const override { return 2; }
  Index z_dim() const override { return 2; }
  Vector evaluate(const Vector& x, const Vector& z, const Vector& theta) const override;
  Matrix jacobian(const Vector& x, const Vector& z, const Vector& theta) const override;
  Matrix evaluate_draws(const Matrix& draws, const Vector& z, const Vector& theta) const override;
  Matrix jacobian_draws(const Matrix& draws, const Vector& z, const Vector& theta) const override;

  /// Required conditional covariance (C_now / beta)(1 - R_now beta rho_c rho_R).
  double required_covariance(const Vector& z, double beta) const;

 private:
  double rho_c_;
  double rho_r_;
};

/// Log-utility Euler equation on growth data with a predetermined rate:
/// x = (G_next, R_next), z = (G_now, R_now), where G is gross consumption
/// growth and R_now is the gross rate set at t that pays out at t+1:
///   beta * R_now / G_next - 1.
/// This is euler_log evaluated at C_now = 1, C_next = G_next, R_next = R_now.
class EulerLogGrowth final : public MomentModel {
 public:
  std::string name() const override { return "euler_log_growth"; }
  Index theta_dim() const override { return 1; }
  Index m_dim() const override { return 1; }
  Index x_dim() const override { return 2; }
  Index z_dim() const override { return 2; }
  Vector evaluate(const Vector& x, const Vector& z, const Vector& theta) const override;
  Matrix jacobian(const Vector& x, const Vector& z, const Vector& theta) const override;
  Matrix evaluate_draws(const Matrix& draws, const Vector& z, const Vector& theta) const override;
  Matrix jacobian_draws(const Matrix& draws, const Vector& z, const Vector& theta) const override;
  /// 1 / C_next is unbounded as C_next -> 0.
  std::vector<int> multiplier_signs() const override { return {-1}; }
};

/// Moment model from callables; the Jacobian falls back to finite
/// differences when not supplied.
class FunctionMoment final : public MomentModel {
 public:
  using Evaluator = std::function<Vector(const Vector&, const Vector&, const Vector&)>;
  using Jacobian = std::function<Matrix(const Vector&, const Vector&, const Vector&)>;

  FunctionMoment(std::string name, Index theta_dim, Index m_dim, Index x_dim, Index z_dim,
                 Evaluator evaluator, Jacobian jacobian = {});

  std::string name() const override { return name_; }
  Index theta_dim() const override { return theta_dim_; }
  Index m_dim() const override { return m_dim_; }
  Index x_dim() const override { return x_dim_; }
  Index z_dim() const override { return z_dim_; }
  Vector evaluate(const Vector& x, const Vector& z, const Vector& theta) const override;
  Matrix jacobian(const Vector& x, const Vector& z, const Vector& theta) const override;

 private:
  std::string name_;
  Index theta_dim_, m_dim_, x_dim_, z_dim_;
  Evaluator evaluator_;
  Jacobian jacobian_;
};

/// Moment model by configuration name: euler_log, euler_crra,
/// euler_quadratic, euler_log_growth. quadratic_covariance needs rho values
/// and is built directly.
MomentPtr make_moment_model(const std::string& name);

}  // namespace tiltlik
