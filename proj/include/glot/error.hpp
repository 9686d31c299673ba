#pragma once

#include <stdexcept>
#include <string>

namespace glot {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller passed arguments that violate an operation's preconditions.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Input data is malformed, missing, or inconsistent.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A computation produced or received non-finite values.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace glot
