#pragma once

#include <stdexcept>
#include <string>

namespace pcdsm {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An instance or an input file breaks a documented invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Reading or writing a file failed.
class IoError : public Error {
 public:
  using Error::Error;
};

class UnknownPreset : public ValidationError {
 public:
  explicit UnknownPreset(const std::string& name)
      : ValidationError("unknown preset '" + name + "'") {}
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

}  // namespace pcdsm
