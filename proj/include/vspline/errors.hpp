#pragma once

#include <stdexcept>
#include <string>

namespace vspline {

/// Argument outside the RKHS domain [0,1] (or otherwise outside an operation's domain).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed input data or configuration.
class InvalidInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A linear system that should be nonsingular was numerically singular.
class SingularSystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A cross-validation denominator vanished; usually an over-parameterized fit.
class DegenerateScoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vspline
