#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace extremalkit {

/// Syntax error in an expression or input file; `offset` is the byte
/// position of the first offending character.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Violated precondition or malformed input (bad dimensions, times off the
/// grid, fiber violations, ...). Maps to CLI exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runtime numerical failure (non-finite values, blow-up, failed Newton
/// iteration, ...). Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace extremalkit
