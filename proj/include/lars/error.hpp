#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lars {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed program, stream or background text.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column)
      : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

// Well-formed input that violates a static restriction (safety, stratification, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A time point outside of the timeline an operation is defined on.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Runtime misuse: tick regression, comparisons over symbols, derived atoms on the input.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace lars
