#pragma once

#include <stdexcept>
#include <string>

namespace ccsim {

// Base for every error raised by the library. Callers that only care about
// "the simulation refused this input" can catch this one type.
class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mismatched spaces, dimensions or unknown site ids.
class ShapeError : public SimError {
 public:
  using SimError::SimError;
};

// Input outside the mathematical domain of an operation.
class DomainError : public SimError {
 public:
  using SimError::SimError;
};

// A forced or post-selected measurement branch has (numerically) zero weight.
class ImpossibleBranchError : public SimError {
 public:
  using SimError::SimError;
};

// Integrator step rejected by its error estimate.
class StepSizeError : public SimError {
 public:
  using SimError::SimError;
};

// A gate or state failed its verification certificate.
class CertificationError : public SimError {
 public:
  using SimError::SimError;
};

}  // namespace ccsim
