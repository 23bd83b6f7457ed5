#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tiltlik {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inputs with inconsistent shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Parameter vector outside the admissible region of a family.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// Input outside the domain of a model function (e.g. non-positive consumption).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure could not produce a usable answer.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Zero is not in the interior of the convex hull of the moment draws.
class NoInteriorSolution : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A matrix that has to be inverted is singular or not positive definite.
class SingularMatrix : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

inline void require_dim(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

}  // namespace tiltlik
