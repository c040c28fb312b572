#pragma once

#include <stdexcept>
#include <string>

namespace linkreg {

// Base for every error raised by the library. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid scenario / MC configuration or malformed config file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input data violates a structural invariant (e.g. reviewed record without match status).
class DataIntegrityError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Numerical failures: singular systems, divergence, degenerate cells, impossible estimation.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class SingularJacobianError : public NumericalError {
 public:
  SingularJacobianError(int iteration, double rcond)
      : NumericalError("singular Jacobian at Newton iteration " + std::to_string(iteration) +
                       " (reciprocal condition estimate " + std::to_string(rcond) + ")"),
        iteration_(iteration) {}
  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

class DivergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class EstimationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateCellError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace linkreg
