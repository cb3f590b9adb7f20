#pragma once

#include <stdexcept>
#include <string>

namespace gamescope {

/// Base of every error thrown by the library. The CLI maps each subclass to a
/// distinct process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments: empty inputs, k out of range, identical path endpoints.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Dimension or layout mismatch between operands.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Non-finite value produced by a primitive, or a violated numeric check.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver hit its cap without meeting tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double achieved_residual)
      : Error(what), residual_(achieved_residual) {}

  double achieved_residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Training left the bounded region (state norm above the divergence guard).
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Malformed file content: checkpoints, configs, CSVs.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace gamescope
