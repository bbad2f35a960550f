#pragma once

#include <stdexcept>
#include <string>

namespace safegain {

struct SafegainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Evaluation outside a gain's declared domain.
struct DomainError : SafegainError {
  using SafegainError::SafegainError;
};

// Inversion bracket could not be expanded/refined to contain the target.
struct BracketError : SafegainError {
  using SafegainError::SafegainError;
};

// Sampled values of a supposedly increasing map violated ordering.
struct NonMonotoneError : SafegainError {
  using SafegainError::SafegainError;
};

// QP constraint set is empty (psi0 = 0 with psi1 < 0).
struct InfeasibleError : SafegainError {
  using SafegainError::SafegainError;
};

// Trajectory too short for the requested finite-difference stencil.
struct TooShortError : SafegainError {
  using SafegainError::SafegainError;
};

// Point-to-set distance requested for a general set without a Lipschitz bound.
struct MissingLipschitzBound : SafegainError {
  using SafegainError::SafegainError;
};

}  // namespace safegain
