#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace aot {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Shapes of the operands do not agree.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// A scalar or configuration parameter is outside its admissible range.
class ParameterError : public Error {
public:
  using Error::Error;
};

/// Input is numerically degenerate (rank deficient, all-zero, ...).
class DegenerateInputError : public Error {
public:
  using Error::Error;
};

/// Non-finite values appeared during a computation. `layer()` is the
/// unrolled layer index when the failure happened inside a layer stack.
class NumericError : public Error {
public:
  explicit NumericError(const std::string& what, std::ptrdiff_t layer = -1)
      : Error(layer >= 0 ? what + " (layer " + std::to_string(layer) + ")" : what),
        layer_(layer) {}
  std::ptrdiff_t layer() const noexcept { return layer_; }

private:
  std::ptrdiff_t layer_;
};

/// Training loss became non-finite at `step()`.
class DivergenceError : public NumericError {
public:
  explicit DivergenceError(std::size_t step)
      : NumericError("train: loss diverged at step " + std::to_string(step)), step_(step) {}
  std::size_t step() const noexcept { return step_; }

private:
  std::size_t step_;
};

/// An analytic oracle was requested but its inputs (e.g. latents) are absent.
class OracleUnavailableError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace aot
