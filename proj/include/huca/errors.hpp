#pragma once

#include <stdexcept>
#include <string>

namespace huca {

// One exception type per failure class named in the operation contracts.
// All carry a human-readable message; CLI commands turn them into a
// machine-readable error record on exit.

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A quantity is undefined because the set it ranges over is empty
// (e.g. the per-pile power limit with zero docked EVs).
struct DomainEmpty : DomainError {
  using DomainError::DomainError;
};

struct NumericalFault : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BoundaryViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Underfull : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AlignmentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace huca
