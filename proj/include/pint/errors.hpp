#pragma once

#include <stdexcept>
#include <string>

namespace pint {

class InvalidSize : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InvalidTransfer : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class RepresentationError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Raised when 1 - c*lambda(k) vanishes for some mode.
class SingularSolve : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Iterative procedure failed to converge where convergence is mandatory.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pint
