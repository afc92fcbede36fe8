#pragma once

#include <stdexcept>
#include <string>

namespace gfc {

/// Input violates a mathematical precondition (pole, singular point,
/// exponent outside the admissible range, ...).
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

/// Caller misuse: bad dimensions, bad flags, malformed input files.
class UsageError : public std::invalid_argument {
 public:
  explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

/// An iteration or series failed to converge within its budget.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Evaluation at a point where the function is singular.
class SingularityError : public DomainError {
 public:
  explicit SingularityError(const std::string& what) : DomainError(what) {}
};

}  // namespace gfc
