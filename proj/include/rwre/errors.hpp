#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rwre {

// Bad argument to an operation (dimension mismatch, s outside [0,1), ...).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Inconsistent configuration, e.g. exact arithmetic requested on laws that
// have no exact rational representation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operation not available for this kind of environment.
class UnsupportedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A solver did not reach its tolerance within budget.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A documented precondition of a check does not hold.
class ContractError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A displacement sequence takes a jump of probability zero.
class UnrealizableError : public std::runtime_error {
 public:
  UnrealizableError(std::size_t step, const std::string& what)
      : std::runtime_error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace rwre
