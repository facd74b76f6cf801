#pragma once

#include <stdexcept>
#include <string>

namespace fadl {

/// Invalid argument or precondition violation at an API boundary.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed dataset, metrics or config text. `line` is 1-based, 0 if unknown.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A node holds no examples and cannot form a local approximation.
class DegenerateShardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operation not defined for the requested approximation family.
class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The combined search direction is not a descent direction.
class StagnationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Line search could not bracket an Armijo-Wolfe step within its probe budget.
class LineSearchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fadl
