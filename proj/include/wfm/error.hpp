#pragma once

#include <stdexcept>
#include <string>

namespace wfm {

/// Bad input or an unsatisfied precondition. The CLI maps these to exit 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed CSV/JSON input. The message names the offending line or cell.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  explicit ParseError(const std::string& what) : Error(what), line_(0) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Argument outside the mathematical domain of an operation (log of a
/// nonpositive value, rank out of range, too few observations).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Failure inside a numerical routine that valid input should not trigger.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace wfm
