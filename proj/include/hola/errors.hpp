#pragma once

#include <stdexcept>
#include <string>

namespace hola {

// Bad inputs: dimension mismatches, non-finite points, invalid parameters.
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Step size outside the range a formula is valid on.
struct StepSizeError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

// A numerical precondition failed at runtime (e.g. a covariance that should
// be positive definite is not).
struct PreconditionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A chain left the finite region (non-finite coordinate or |x| beyond the
// divergence radius).
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace hola
