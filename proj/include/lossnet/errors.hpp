#pragma once

#include <stdexcept>
#include <string>

namespace lossnet {

// Bad arguments or malformed input (CLI exit code 2).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Parameters are well-formed but violate a model assumption the requested
// computation depends on (CLI exit code 3).
class AssumptionError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Exhaustive enumeration refused because the tree is too large.
class SizeGuardError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// A relation that must hold mathematically failed numerically.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace lossnet
