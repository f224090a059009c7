#pragma once

#include <stdexcept>
#include <string>

namespace hisd {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed argument: dimension mismatch, out-of-range parameter, bad flag.
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

/// An evaluation produced a non-finite value.
class NumericOverflowError : public Error {
 public:
  using Error::Error;
};

/// Input lies outside the numerically safe domain of a model
/// (e.g. near-coincident particles in a pair potential).
class NumericDomainError : public Error {
 public:
  using Error::Error;
};

/// Operation not available for this configuration (e.g. dense Hessian
/// above the storage cap).
class UnsupportedOperationError : public Error {
 public:
  using Error::Error;
};

/// Gram-Schmidt input was numerically rank deficient.
class DegenerateBasisError : public Error {
 public:
  using Error::Error;
};

/// Iterative solver ran out of iterations; carries the best residual seen.
class ConvergenceFailureError : public Error {
 public:
  ConvergenceFailureError(const std::string& what, double best_residual)
      : Error(what), best_residual_(best_residual) {}

  double best_residual() const { return best_residual_; }

 private:
  double best_residual_;
};

}  // namespace hisd
