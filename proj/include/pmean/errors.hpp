#pragma once

#include <stdexcept>
#include <string>

namespace pmean {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed caller input: dimension mismatches, bad files, missing fields.
struct InputError : Error {
  using Error::Error;
};

// Mathematically out-of-domain request (antipodal log, step past the
// injectivity radius, unit direction of coincident points, ...).
struct DomainError : Error {
  using Error::Error;
};

// A measure/ball configuration that fails admissibility validation.
struct ValidationError : Error {
  using Error::Error;
};

// Ball radius violates the admissible-radius bound.
struct AdmissibilityError : ValidationError {
  using ValidationError::ValidationError;
};

// Support point outside the prescribed ball.
struct SupportContainmentError : ValidationError {
  using ValidationError::ValidationError;
};

// p = 1 with support contained in a single geodesic.
struct DegenerateSupportError : ValidationError {
  using ValidationError::ValidationError;
};

// A constant that needs the oracle mean / Hessian before it can be produced.
struct DeferredConstantError : Error {
  using Error::Error;
};

// Deterministic oracle failed to reach its tolerance.
struct NoConvergenceError : Error {
  NoConvergenceError(const std::string& msg, double best_grad_norm)
      : Error(msg), best_grad_norm(best_grad_norm) {}
  double best_grad_norm;
};

// A "cannot happen" condition; indicates a bug, maps to exit code 3.
struct InternalInvariantError : Error {
  using Error::Error;
};

}  // namespace pmean
