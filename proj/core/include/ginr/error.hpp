#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ginr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. Carries the 1-based line number when known (0 otherwise).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A precondition or structural invariant was violated by the caller's data.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: eigensolver non-convergence, training divergence, unstable integration.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace ginr
