#pragma once

#include <stdexcept>
#include <string>

namespace exhaust {

/// Raised when an input violates a documented precondition or invariant.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// The generator has more than one stationary direction (or none).
class DegenerateChainError : public std::runtime_error {
 public:
  explicit DegenerateChainError(const std::string& what) : std::runtime_error(what) {}
};

/// A sum-of-ratios problem whose denominators are not certifiably positive.
class InvalidProblemError : public std::invalid_argument {
 public:
  explicit InvalidProblemError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace exhaust
