#pragma once

#include <stdexcept>
#include <string>

namespace srlvm {

/// Base exception for everything the library reports. The message is meant to
/// be shown to a user as-is.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input file could not be read or parsed.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A precondition on sizes or parameter ranges was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A model file does not match the expected schema.
class SchemaError : public Error {
 public:
  SchemaError(std::string field, const std::string& what)
      : Error("model schema error at \"" + field + "\": " + what),
        field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Numerical failure inside an objective, a linear solve or an update step.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace srlvm
