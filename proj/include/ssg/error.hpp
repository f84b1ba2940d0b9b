#pragma once

#include <stdexcept>
#include <string>

namespace ssg {

/// Operand sizes disagree.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A point lies outside the domain of a function, or an operator
/// assumption (positivity, finiteness) is violated.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Iterates or subgradients left the bounded regime the method relies on.
struct DivergenceError : std::runtime_error {
  DivergenceError(const std::string &what, std::size_t iteration)
    : std::runtime_error(what), iteration(iteration) {}
  std::size_t iteration;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

} // namespace ssg
