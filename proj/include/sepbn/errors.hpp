#pragma once

#include <stdexcept>
#include <string>

namespace sepbn {

/// Bad or inconsistent input: shape mismatches, out-of-range indices,
/// malformed files, stochasticity violations.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Input is well-formed but exceeds a configured size limit.
class ResourceError : public ValidationError {
 public:
  explicit ResourceError(const std::string& what) : ValidationError(what) {}
};

/// An internal numerical consistency check failed.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when an operation that requires a separable table is handed one
/// whose subspace residual exceeds the tolerance.
class NotSeparableError : public std::runtime_error {
 public:
  NotSeparableError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}

  double residual() const { return residual_; }

 private:
  double residual_;
};

}  // namespace sepbn
