#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace zmfit {

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

// Malformed input text. line() is 1-based; 0 when no line applies.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

// Input that cannot support a fit (too few points, undefined shift, ...).
class DegenerateFit : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace zmfit
