#pragma once

#include <stdexcept>
#include <string>

namespace geocon {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument or configuration outside an operation's contract.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed or truncated file, or a failed read/write.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace geocon
