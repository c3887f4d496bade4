#pragma once

#include <stdexcept>
#include <string>

namespace speclab {

/// Invalid configuration or domain-violating input. The CLI maps this to exit status 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A parameter lies outside the domain where a constant or bound is defined
/// (for instance b >= E0(d)).
class DomainError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// A numerical precondition failed at run time (energy on the spectrum,
/// singular kernel, degenerate instance). The CLI maps this to exit status 3.
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Eigenvector matching lost track of a branch; the message names the
/// offending coupling subinterval.
class RefineError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

/// The dense eigensolver did not reach the residual contract.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A mathematical invariant was violated beyond solver tolerance. Always a bug.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace speclab
