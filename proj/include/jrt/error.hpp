#pragma once

#include <stdexcept>
#include <string>

namespace jrt {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not conform for the named operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// NaN or Inf where finite values are required.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

// Malformed scene file, checkpoint, or config document.
class FormatError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace jrt
