#pragma once

#include <stdexcept>
#include <string>

namespace flipconc {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad site, p < 1, t < 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An exact computation would exceed a configured enumeration cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file or specification string.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A checked inequality failed. The message names the inequality.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace flipconc
