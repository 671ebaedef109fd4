#pragma once

#include <stdexcept>
#include <string>

namespace bmiopt {

/// Malformed inputs: dimension mismatches, broken bounds, missing fields.
struct StructuralError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Inputs outside the mathematical domain of an operation
/// (e.g. Lyapunov solve with a non-Hurwitz matrix).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Numerical breakdown inside an iterative solver.  The message carries a
/// dump of the failing iterate so the caller can log or resample.
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Eigenvalue derivatives do not exist at the requested point
/// (repeated eigenvalues or an ill-conditioned eigenvector basis).
struct DerivativeUnavailable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace bmiopt
