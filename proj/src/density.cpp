#include "tiltlik/density.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace tiltlik {

AffineMap AffineMap::identity(Index n) {
  return AffineMap{Vector::Zero(n), Matrix::Identity(n, n)};
}

Vector AffineMap::apply(const Vector& reduced) const {
  require_dim(reduced.size() == reduced_dim(), "parameter vector has wrong length");
  return offset + jacobian * reduced;
}

AffineMapBuilder::AffineMapBuilder(Index full_dim, Index reduced_dim)
    : map_{Vector::Zero(full_dim), Matrix::Zero(full_dim, reduced_dim)} {}

AffineMapBuilder& AffineMapBuilder::fix(Index slot, double value) {
  map_.offset(slot) = value;
  map_.jacobian.row(slot).setZero();
  return *this;
}

AffineMapBuilder& AffineMapBuilder::bind(Index slot, Index reduced_index, double scale) {
  map_.jacobian(slot, reduced_index) = scale;
  return *this;
}

Matrix draw_noise(Index n, Index noise_dim, RandomStream& rng) {
  require_dim(n >= 1, "number of draws must be positive");
  RowMatrix noise(n, noise_dim);
  rng.fill_normal(noise);
  return noise;
}

Matrix ConditionalDensity::simulate(const Vector& z, const Vector& phi, Index n,
                                    RandomStream& rng) const {
  if (z.size() != z_dim()) throw DimensionError(name() + ": conditioning vector has wrong length");
  if (phi.size() != param_dim()) throw DimensionError(name() + ": parameter vector has wrong length");
  return transform_noise(z, phi, draw_noise(n, noise_dim(), rng));
}

Vector ConditionalDensity::finite_difference_score(const Vector& x, const Vector& z,
                                                   const Vector& phi) const {
  Vector grad(phi.size());
  Vector p = phi;
  for (Index k = 0; k < phi.size(); ++k) {
    const double h = 1e-6 * std::max(1.0, std::abs(phi(k)));
    p(k) = phi(k) + h;
    const double up = logpdf(x, z, p);
    p(k) = phi(k) - h;
    const double down = logpdf(x, z, p);
    p(k) = phi(k);
    grad(k) = (up - down) / (2.0 * h);
  }
  return grad;
}

double ConditionalDensity::sum_logpdf(const Matrix& x, const Matrix& z, const Vector& phi) const {
  require_dim(x.rows() == z.rows(), "sum_logpdf: x and z differ in row count");
  double sum = 0.0;
  for (Index i = 0; i < x.rows(); ++i) sum += logpdf(x.row(i).transpose(), z.row(i).transpose(), phi);
  return sum;
}

Vector ConditionalDensity::score(const Vector& x, const Vector& z, const Vector& phi) const {
  return finite_difference_score(x, z, phi);
}

Matrix ConditionalDensity::score_draws(const Matrix& x, const Vector& z, const Vector& phi) const {
  Matrix out(x.rows(), param_dim());
  for (Index j = 0; j < x.rows(); ++j) out.row(j) = score(x.row(j).transpose(), z, phi).transpose();
  return out;
}

void ConditionalDensity::check_dims(const Vector& x, const Vector& z, const Vector& phi) const {
  if (x.size() != x_dim() || z.size() != z_dim() || phi.size() != param_dim()) {
    std::ostringstream msg;
    msg << name() << ": dimension mismatch (x " << x.size() << "/" << x_dim() << ", z "
        << z.size() << "/" << z_dim() << ", phi " << phi.size() << "/" << param_dim() << ")";
    throw DimensionError(msg.str());
  }
}

void GaussianVarParams::validate() const {
  const Index d = intercept.size();
  require_dim(transition.rows() == d, "transition rows must equal x_dim");
  require_dim(chol_cov.rows() == d && chol_cov.cols() == d, "chol_cov must be x_dim x x_dim");
  for (Index r = 0; r < d; ++r) {
    if (!(chol_cov(r, r) > 0.0) || !std::isfinite(chol_cov(r, r)))
      throw InvalidParameter("covariance factor needs a strictly positive diagonal");
    for (Index c = r + 1; c < d; ++c)
      if (chol_cov(r, c) != 0.0) throw InvalidParameter("covariance factor must be lower triangular");
  }
}

GaussianVarDensity::GaussianVarDensity(Index x_dim, Index z_dim, DiagonalCoding coding)
    : GaussianVarDensity(x_dim, z_dim, AffineMap::identity(full_dim(x_dim, z_dim)), coding) {}

GaussianVarDensity::GaussianVarDensity(Index x_dim, Index z_dim, AffineMap map,
                                       DiagonalCoding coding)
    : x_dim_(x_dim), z_dim_(z_dim), map_(std::move(map)), coding_(coding) {
  require_dim(x_dim >= 1 && z_dim >= 0, "gaussian_var: bad dimensions");
  require_dim(map_.full_dim() == full_dim(x_dim, z_dim),
              "gaussian_var: affine map does not match the full parameter layout");
}

Index GaussianVarDensity::chol_slot(Index row, Index col) const {
  require_dim(col <= row && row < x_dim_, "chol_slot: entry must be in the lower triangle");
  return x_dim_ + x_dim_ * z_dim_ + row * (row + 1) / 2 + col;
}

Vector GaussianVarDensity::pack(const GaussianVarParams& p) const {
  p.validate();
  require_dim(p.intercept.size() == x_dim_ && p.transition.cols() == z_dim_,
              "gaussian_var: parameter shapes do not match the family");
  Vector full(full_dim(x_dim_, z_dim_));
  for (Index k = 0; k < x_dim_; ++k) full(intercept_slot(k)) = p.intercept(k);
  for (Index r = 0; r < x_dim_; ++r)
    for (Index c = 0; c < z_dim_; ++c) full(transition_slot(r, c)) = p.transition(r, c);
  for (Index r = 0; r < x_dim_; ++r)
    for (Index c = 0; c <= r; ++c) {
      const double v = p.chol_cov(r, c);
      full(chol_slot(r, c)) = (r == c && coding_ == DiagonalCoding::log) ? std::log(v) : v;
    }
  return full;
}

GaussianVarParams GaussianVarDensity::unpack_full(const Vector& full) const {
  require_dim(full.size() == full_dim(x_dim_, z_dim_), "gaussian_var: full vector has wrong length");
  GaussianVarParams p{Vector(x_dim_), Matrix(x_dim_, z_dim_), Matrix::Zero(x_dim_, x_dim_)};
  for (Index k = 0; k < x_dim_; ++k) p.intercept(k) = full(intercept_slot(k));
  for (Index r = 0; r < x_dim_; ++r)
    for (Index c = 0; c < z_dim_; ++c) p.transition(r, c) = full(transition_slot(r, c));
  for (Index r = 0; r < x_dim_; ++r)
    for (Index c = 0; c <= r; ++c) {
      const double v = full(chol_slot(r, c));
      p.chol_cov(r, c) = (r == c && coding_ == DiagonalCoding::log) ? std::exp(v) : v;
    }
  p.validate();
  return p;
}

GaussianVarParams GaussianVarDensity::params(const Vector& phi) const {
  if (phi.size() != param_dim()) throw DimensionError(name() + ": parameter vector has wrong length");
  return unpack_full(map_.apply(phi));
}

Vector GaussianVarDensity::mean(const Vector& z, const Vector& phi) const {
  const auto p = params(phi);
  return p.intercept + p.transition * z;
}

double GaussianVarDensity::gaussian_logpdf(const Vector& y, const Vector& w,
                                           const GaussianVarParams& p) const {
  const Vector e = y - p.intercept - p.transition * w;
  const Vector u = p.chol_cov.triangularView<Eigen::Lower>().solve(e);
  double log_det = 0.0;
  for (Index k = 0; k < x_dim_; ++k) log_det += std::log(p.chol_cov(k, k));
  constexpr double kHalfLog2Pi = 0.91893853320467274178;
  return -static_cast<double>(x_dim_) * kHalfLog2Pi - log_det - 0.5 * u.squaredNorm();
}

double GaussianVarDensity::gaussian_sum_logpdf(const Matrix& y, const Matrix& w,
                                               const GaussianVarParams& p) const {
  Matrix e = y - w * p.transition.transpose();
  e.rowwise() -= p.intercept.transpose();
  // Rows of u solve L u_i = e_i.
  const Matrix u = p.chol_cov.triangularView<Eigen::Lower>().solve(e.transpose());
  double log_det = 0.0;
  for (Index k = 0; k < x_dim_; ++k) log_det += std::log(p.chol_cov(k, k));
  constexpr double kHalfLog2Pi = 0.91893853320467274178;
  const double n = static_cast<double>(y.rows());
  return -n * (static_cast<double>(x_dim_) * kHalfLog2Pi + log_det) - 0.5 * u.squaredNorm();
}

Vector GaussianVarDensity::gaussian_full_score(const Vector& y, const Vector& w,
                                               const GaussianVarParams& p) const {
  const auto L = p.chol_cov.triangularView<Eigen::Lower>();
  const Vector e = y - p.intercept - p.transition * w;
  const Vector u = L.solve(e);
  const Vector v = L.transpose().solve(u);  // Sigma^{-1} e
  // d/dL of -0.5 |L^{-1} e|^2 is v u'; the log-determinant adds -1/L_kk.
  const Matrix g_chol = v * u.transpose();

  Vector full(full_dim(x_dim_, z_dim_));
  for (Index k = 0; k < x_dim_; ++k) full(intercept_slot(k)) = v(k);
  for (Index r = 0; r < x_dim_; ++r)
    for (Index c = 0; c < z_dim_; ++c) full(transition_slot(r, c)) = v(r) * w(c);
  for (Index r = 0; r < x_dim_; ++r)
    for (Index c = 0; c <= r; ++c) {
      double g = g_chol(r, c);
      if (r == c) {
        const double l = p.chol_cov(r, r);
        g -= 1.0 / l;
        if (coding_ == DiagonalCoding::log) g *= l;
      }
      full(chol_slot(r, c)) = g;
    }
  return full;
}

Matrix GaussianVarDensity::gaussian_score_draws(const Matrix& y, const Vector& w,
                                                const GaussianVarParams& p) const {
  const Vector mean_v = p.intercept + p.transition * w;
  const Matrix e = y.rowwise() - mean_v.transpose();
  const auto L = p.chol_cov.triangularView<Eigen::Lower>();
  const Matrix u = L.solve(e.transpose()).transpose();
  const Matrix v = L.transpose().solve(u.transpose()).transpose();
  Matrix full(y.rows(), full_dim(x_dim_, z_dim_));
  for (Index k = 0; k < x_dim_; ++k) full.col(intercept_slot(k)) = v.col(k);
  for (Index r = 0; r < x_dim_; ++r)
    for (Index c = 0; c < z_dim_; ++c) full.col(transition_slot(r, c)) = v.col(r) * w(c);
  for (Index r = 0; r < x_dim_; ++r)
    for (Index c = 0; c <= r; ++c) {
      auto col = full.col(chol_slot(r, c));
      col = v.col(r).cwiseProduct(u.col(c));
      if (r == c) {
        const double l = p.chol_cov(r, r);
        col.array() -= 1.0 / l;
        if (coding_ == DiagonalCoding::log) col *= l;
      }
    }
  return full * map_.jacobian;
}

Matrix GaussianVarDensity::score_draws(const Matrix& x, const Vector& z, const Vector& phi) const {
  if (x.cols() != x_dim_ || z.size() != z_dim_) throw DimensionError(name() + ": score_draws dimension mismatch");
  return gaussian_score_draws(x, z, params(phi));
}

Vector GaussianVarDensity::reduce_score(const Vector& full_score) const {
  return map_.jacobian.transpose() * full_score;
}

double GaussianVarDensity::logpdf(const Vector& x, const Vector& z, const Vector& phi) const {
  check_dims(x, z, phi);
  return gaussian_logpdf(x, z, params(phi));
}

double GaussianVarDensity::sum_logpdf(const Matrix& x, const Matrix& z, const Vector& phi) const {
  if (x.rows() != z.rows() || x.cols() != x_dim_ || z.cols() != z_dim_) {
    throw DimensionError(name() + ": sum_logpdf dimension mismatch");
  }
  return gaussian_sum_logpdf(x, z, params(phi));
}

Matrix GaussianVarDensity::transform_noise(const Vector& z, const Vector& phi,
                                           const Matrix& noise) const {
  if (noise.cols() != x_dim_) throw DimensionError(name() + ": noise has wrong width");
  if (z.size() != z_dim_) throw DimensionError(name() + ": conditioning vector has wrong length");
  const auto p = params(phi);
  const Vector m = p.intercept + p.transition * z;
  // Column by column: draw_k = m_k + sum_{l <= k} L_kl noise_l.
  Matrix draws(noise.rows(), x_dim_);
  for (Index k = 0; k < x_dim_; ++k) {
    auto col = draws.col(k);
    col.setConstant(m(k));
    for (Index l = 0; l <= k; ++l) {
      if (p.chol_cov(k, l) != 0.0) col += p.chol_cov(k, l) * noise.col(l);
    }
  }
  return draws;
}

Vector GaussianVarDensity::score(const Vector& x, const Vector& z, const Vector& phi) const {
  check_dims(x, z, phi);
  return reduce_score(gaussian_full_score(x, z, params(phi)));
}

Vector LogNormalVarDensity::log_levels(const Vector& v, const char* what) {
  for (Index k = 0; k < v.size(); ++k)
    if (!(v(k) > 0.0))
      throw DomainError(std::string("lognormal_var: ") + what + " must be strictly positive");
  return v.array().log().matrix();
}

double LogNormalVarDensity::logpdf(const Vector& x, const Vector& z, const Vector& phi) const {
  check_dims(x, z, phi);
  const Vector y = log_levels(x, "x");
  return gaussian_logpdf(y, log_levels(z, "z"), params(phi)) - y.sum();
}

double LogNormalVarDensity::sum_logpdf(const Matrix& x, const Matrix& z, const Vector& phi) const {
  if (x.rows() != z.rows() || x.cols() != x_dim() || z.cols() != z_dim()) {
    throw DimensionError(name() + ": sum_logpdf dimension mismatch");
  }
  if (x.size() > 0 && !(x.minCoeff() > 0.0)) throw DomainError("lognormal_var: x must be strictly positive");
  if (z.size() > 0 && !(z.minCoeff() > 0.0)) throw DomainError("lognormal_var: z must be strictly positive");
  const Matrix y = x.array().log().matrix();
  return gaussian_sum_logpdf(y, z.array().log().matrix(), params(phi)) - y.sum();
}

Matrix LogNormalVarDensity::score_draws(const Matrix& x, const Vector& z, const Vector& phi) const {
  if (x.cols() != x_dim() || z.size() != z_dim()) throw DimensionError(name() + ": score_draws dimension mismatch");
  if (x.size() > 0 && !(x.minCoeff() > 0.0)) throw DomainError("lognormal_var: x must be strictly positive");
  return gaussian_score_draws(x.array().log().matrix(), log_levels(z, "z"), params(phi));
}

Matrix LogNormalVarDensity::transform_noise(const Vector& z, const Vector& phi,
                                            const Matrix& noise) const {
  Matrix draws = GaussianVarDensity::transform_noise(log_levels(z, "z"), phi, noise);
  draws.array() = draws.array().exp();
  return draws;
}

Vector LogNormalVarDensity::score(const Vector& x, const Vector& z, const Vector& phi) const {
  check_dims(x, z, phi);
  return reduce_score(gaussian_full_score(log_levels(x, "x"), log_levels(z, "z"), params(phi)));
}

}  // namespace tiltlik
