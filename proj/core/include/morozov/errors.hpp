#pragma once

#include <stdexcept>
#include <string>

namespace morozov {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments: dimension mismatch, out-of-range parameter, etc.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// An iterative solve hit its iteration cap. Carries the best value reached.
class ConvergenceFailure : public Error {
 public:
  ConvergenceFailure(const std::string& what, double best_value)
      : Error(what), best_value_(best_value) {}

  double best_value() const noexcept { return best_value_; }

 private:
  double best_value_;
};

/// The regularizer is not strictly convex along ker A, so the Lagrange
/// problem has no unique minimizer.
class AssumptionViolation : public Error {
 public:
  using Error::Error;
};

/// A check needs a dense matrix but the operator is matrix-free.
class UnsupportedCheck : public Error {
 public:
  using Error::Error;
};

/// Filesystem and parse errors.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace morozov
