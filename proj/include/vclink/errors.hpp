#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace vclink {

// Shape or contract violation in the caller's input (dimensions, unsorted data, bad config).
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A matrix that must be positive definite is not, or a value left its domain.
// Carries the offending element (family, draw, ...) when one is known.
class NumericDomainError : public std::domain_error {
 public:
  explicit NumericDomainError(const std::string& what,
                              std::optional<std::size_t> index = std::nullopt)
      : std::domain_error(index ? what + " (index " + std::to_string(*index) + ")" : what),
        index_(index) {}

  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  std::optional<std::size_t> index_;
};

// No optimizer start reached an acceptable optimum.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vclink
