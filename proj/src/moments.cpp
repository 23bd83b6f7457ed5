#include "tiltlik/moments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace tiltlik {

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0)) throw DomainError(std::string(what) + " must be positive");
}

}  // namespace

void MomentModel::check_dims(const Vector& x, const Vector& z, const Vector& theta) const {
  if (x.size() != x_dim()) throw DimensionError(name() + ": x has wrong dimension");
  if (z.size() != z_dim()) throw DimensionError(name() + ": z has wrong dimension");
  if (theta.size() != theta_dim()) throw DimensionError(name() + ": theta has wrong dimension");
}

Matrix MomentModel::jacobian(const Vector& x, const Vector& z, const Vector& theta) const {
  return finite_difference_jacobian(x, z, theta);
}

Matrix MomentModel::finite_difference_jacobian(const Vector& x, const Vector& z,
                                               const Vector& theta) const {
  check_dims(x, z, theta);
  Matrix jac(m_dim(), theta_dim());
  Vector t = theta;
  for (Index k = 0; k < theta_dim(); ++k) {
    const double h = 1e-6 * std::max(1.0, std::abs(theta(k)));
    t(k) = theta(k) + h;
    const Vector up = evaluate(x, z, t);
    t(k) = theta(k) - h;
    const Vector down = evaluate(x, z, t);
    t(k) = theta(k);
    jac.col(k) = (up - down) / (2.0 * h);
  }
  return jac;
}

Matrix MomentModel::evaluate_draws(const Matrix& draws, const Vector& z, const Vector& theta) const {
  if (draws.cols() != x_dim()) throw DimensionError(name() + ": draws have wrong column count");
  Matrix out(draws.rows(), m_dim());
  for (Index j = 0; j < draws.rows(); ++j) {
    out.row(j) = evaluate(draws.row(j).transpose(), z, theta).transpose();
  }
  return out;
}

Matrix MomentModel::jacobian_draws(const Matrix& draws, const Vector& z, const Vector& theta) const {
  if (draws.cols() != x_dim()) throw DimensionError(name() + ": draws have wrong column count");
  const Index md = m_dim();
  const Index td = theta_dim();
  Matrix out(draws.rows(), md * td);
  for (Index j = 0; j < draws.rows(); ++j) {
    const Matrix jac = jacobian(draws.row(j).transpose(), z, theta);
    for (Index a = 0; a < md; ++a) out.row(j).segment(a * td, td) = jac.row(a);
  }
  return out;
}

// euler_log

Vector EulerLogUtility::evaluate(const Vector& x, const Vector& z, const Vector& theta) const {
  check_dims(x, z, theta);
  require_positive(x(0), "consumption");
  require_positive(z(0), "consumption");
  Vector m(1);
  m(0) = theta(0) * z(0) * x(1) / x(0) - 1.0;
  return m;
}

Matrix EulerLogUtility::jacobian(const Vector& x, const Vector& z, const Vector& theta) const {
  check_dims(x, z, theta);
  require_positive(x(0), "consumption");
  require_positive(z(0), "consumption");
  Matrix j(1, 1);
  j(0, 0) = z(0) * x(1) / x(0);
  return j;
}

Matrix EulerLogUtility::evaluate_draws(const Matrix& draws, const Vector& z,
                                       const Vector& theta) const {
  require_dim(draws.cols() == 2 && z.size() == 2 && theta.size() == 1,
              "euler_log: wrong dimensions");
  require_positive(z(0), "consumption");
  if (draws.rows() > 0) require_positive(draws.col(0).minCoeff(), "consumption");
  Matrix out(draws.rows(), 1);
  out.col(0) = (theta(0) * z(0)) * draws.col(1).cwiseQuotient(draws.col(0)).array() - 1.0;
  return out;
}

Matrix EulerLogUtility::jacobian_draws(const Matrix& draws, const Vector& z, const Vector& theta) const {
  require_dim(draws.cols() == 2 && z.size() == 2 && theta.size() == 1, "euler_log: wrong dimensions");
  require_positive(z(0), "consumption");
  if (draws.rows() > 0) require_positive(draws.col(0).minCoeff(), "consumption");
  Matrix out(draws.rows(), 1);
  out.col(0) = z(0) * draws.col(1).cwiseQuotient(draws.col(0));
  return out;
}

// euler_crra

Vector EulerCrra::evaluate(const Vector& x, const Vector& z, const Vector& theta) const {
  check_dims(x, z, theta);
  require_positive(x(0), "consumption");
  require_positive(z(0), "consumption");
  Vector m(1);
  m(0) = theta(0) * x(1) * std::pow(x(0) / z(0), -theta(1)) - 1.0;
  return m;
}

Matrix EulerCrra::jacobian(const Vector& x, const Vector& z, const Vector& theta) const {
  check_dims(x, z, theta);
  require_positive(x(0), "consumption");
  require_positive(z(0), "consumption");
  const double ratio = x(0) / z(0);
  const double disc = x(1) * std::pow(ratio, -theta(1));
  Matrix j(1, 2);
  j(0, 0) = disc;
  j(0, 1) = -theta(0) * disc * std::log(ratio);
  return j;
}

Matrix EulerCrra::evaluate_draws(const Matrix& draws, const Vector& z, const Vector& theta) const {
  require_dim(draws.cols() == 2 && z.size() == 2 && theta.size() == 2,
              "euler_crra: wrong dimensions");
  require_positive(z(0), "consumption");
  if (draws.rows() > 0) require_positive(draws.col(0).minCoeff(), "consumption");
  Matrix out(draws.rows(), 1);
  out.col(0) = theta(0) * draws.col(1).array() *
                   (-theta(1) * (draws.col(0).array() / z(0)).log()).exp() -
               1.0;
  return out;
}

Matrix EulerCrra::jacobian_draws(const Matrix& draws, const Vector& z, const Vector& theta) const {
  require_dim(draws.cols() == 2 && z.size() == 2 && theta.size() == 2, "euler_crra: wrong dimensions");
  require_positive(z(0), "consumption");
  if (draws.rows() > 0) require_positive(draws.col(0).minCoeff(), "consumption");
  const Eigen::ArrayXd log_ratio = (draws.col(0).array() / z(0)).log();
  const Eigen::ArrayXd disc = draws.col(1).array() * (-theta(1) * log_ratio).exp();
  Matrix out(draws.rows(), 2);
  out.col(0) = disc.matrix();
  out.col(1) = (-theta(0) * disc * log_ratio).matrix();
  return out;
}

// euler_quadratic

Vector EulerQuadratic::evaluate(const Vector& x, const Vector& z, const Vector& theta) const {
  check_dims(x, z, theta);
  Vector m(1);
  m(0) = theta(0) * x(1) * x(0) - z(0);
  return m;
}

Matrix EulerQuadratic::jacobian(const Vector& x, const Vector& z, const Vector& theta) const {
  check_dims(x, z, theta);
  Matrix j(1, 1);
  j(0, 0) = x(1) * x(0);
  return j;
}

// quadratic_covariance

double QuadraticCovarianceRestriction::required_covariance(const Vector& z, double beta) const {
  if (!(beta > 0.0)) throw InvalidParameter("quadratic_covariance: beta must be positive");
  return (z(0) / beta) * (1.0 - z(1) * beta * rho_c_ * rho_r_);
}

Vector QuadraticCovarianceRestriction::evaluate(const Vector& x, const Vector& z,
                                                const Vector& theta) const {
  check_dims(x, z, theta);
  Vector m(1);
  m(0) = (x(0) - rho_c_ * z(0)) * (x(1) - rho_r_ * z(1)) - required_covariance(z, theta(0));
  return m;
}

Matrix QuadraticCovarianceRestriction::jacobian(const Vector& x, const Vector& z,
                                                const Vector& theta) const {
  check_dims(x, z, theta);
  if (!(theta(0) > 0.0)) throw InvalidParameter("quadratic_covariance: beta must be positive");
  Matrix j(1, 1);
  j(0, 0) = z(0) / (theta(0) * theta(0));
  return j;
}

Matrix QuadraticCovarianceRestriction::evaluate_draws(const Matrix& draws, const Vector& z,
                                                      const Vector& theta) const {
  require_dim(draws.cols() == 2 && z.size() == 2 && theta.size() == 1,
              "quadratic_covariance: wrong dimensions");
  const double k = required_covariance(z, theta(0));
  Matrix out(draws.rows(), 1);
  out.col(0) = (draws.col(0).array() - rho_c_ * z(0)) * (draws.col(1).array() - rho_r_ * z(1)) - k;
  return out;
}

Matrix QuadraticCovarianceRestriction::jacobian_draws(const Matrix& draws, const Vector& z,
                                                      const Vector& theta) const {
  require_dim(draws.cols() == 2 && z.size() == 2 && theta.size() == 1,
              "quadratic_covariance: wrong dimensions");
  if (!(theta(0) > 0.0)) throw InvalidParameter("quadratic_covariance: beta must be positive");
  return Matrix::Constant(draws.rows(), 1, z(0) / (theta(0) * theta(0)));
}

// euler_log_growth

Vector EulerLogGrowth::evaluate(const Vector& x, const Vector& z, const Vector& theta) const {
  check_dims(x, z, theta);
  require_positive(x(0), "consumption growth");
  Vector m(1);
  m(0) = theta(0) * z(1) / x(0) - 1.0;
  return m;
}

Matrix EulerLogGrowth::jacobian(const Vector& x, const Vector& z, const Vector& theta) const {
  check_dims(x, z, theta);
  require_positive(x(0), "consumption growth");
  Matrix j(1, 1);
  j(0, 0) = z(1) / x(0);
  return j;
}

Matrix EulerLogGrowth::evaluate_draws(const Matrix& draws, const Vector& z,
                                      const Vector& theta) const {
  require_dim(draws.cols() == 2 && z.size() == 2 && theta.size() == 1,
              "euler_log_growth: wrong dimensions");
  if (draws.rows() > 0) require_positive(draws.col(0).minCoeff(), "consumption growth");
  Matrix out(draws.rows(), 1);
  out.col(0) = (theta(0) * z(1)) * draws.col(0).array().inverse() - 1.0;
  return out;
}

Matrix EulerLogGrowth::jacobian_draws(const Matrix& draws, const Vector& z, const Vector& theta) const {
  require_dim(draws.cols() == 2 && z.size() == 2 && theta.size() == 1,
              "euler_log_growth: wrong dimensions");
  if (draws.rows() > 0) require_positive(draws.col(0).minCoeff(), "consumption growth");
  Matrix out(draws.rows(), 1);
  out.col(0) = z(1) * draws.col(0).array().inverse();
  return out;
}

// FunctionMoment

FunctionMoment::FunctionMoment(std::string name, Index theta_dim, Index m_dim, Index x_dim,
                               Index z_dim, Evaluator evaluator, Jacobian jacobian)
    : name_(std::move(name)),
      theta_dim_(theta_dim),
      m_dim_(m_dim),
      x_dim_(x_dim),
      z_dim_(z_dim),
      evaluator_(std::move(evaluator)),
      jacobian_(std::move(jacobian)) {
  if (!evaluator_) throw InvalidParameter("FunctionMoment: evaluator is empty");
}

Vector FunctionMoment::evaluate(const Vector& x, const Vector& z, const Vector& theta) const {
  check_dims(x, z, theta);
  Vector m = evaluator_(x, z, theta);
  require_dim(m.size() == m_dim_, name_ + ": evaluator returned wrong size");
  return m;
}

Matrix FunctionMoment::jacobian(const Vector& x, const Vector& z, const Vector& theta) const {
  if (!jacobian_) return finite_difference_jacobian(x, z, theta);
  check_dims(x, z, theta);
  Matrix j = jacobian_(x, z, theta);
  require_dim(j.rows() == m_dim_ && j.cols() == theta_dim_, name_ + ": jacobian has wrong shape");
  return j;
}

bool admissible_multipliers(const MomentModel& model, const Vector& mu) {
  const std::vector<int> signs = model.multiplier_signs();
  if (signs.empty()) return true;
  require_dim(static_cast<Index>(signs.size()) == mu.size(), "multiplier_signs: wrong length");
  for (Index k = 0; k < mu.size(); ++k) {
    if (signs[static_cast<std::size_t>(k)] * mu(k) < 0.0) return false;
  }
  return true;
}

MomentPtr make_moment_model(const std::string& name) {
  if (name == "euler_log") return std::make_shared<EulerLogUtility>();
  if (name == "euler_crra") return std::make_shared<EulerCrra>();
  if (name == "euler_quadratic") return std::make_shared<EulerQuadratic>();
  if (name == "euler_log_growth") return std::make_shared<EulerLogGrowth>();
  throw InvalidParameter("unknown moment model '" + name + "'");
}

}  // namespace tiltlik
