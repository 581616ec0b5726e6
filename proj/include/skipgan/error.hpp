#pragma once

#include <stdexcept>
#include <string>

namespace skipgan {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input document. `location()` is either "line:column" or a JSON
/// pointer such as "/features/3/name".
class ParseError : public Error {
 public:
  ParseError(const std::string& location, const std::string& what)
      : Error(location + ": " + what), location_(location) {}
  const std::string& location() const noexcept { return location_; }

 private:
  std::string location_;
};

/// Well-formed input that breaks a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Artifact produced for a different schema or pipeline configuration.
class SchemaMismatchError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Corrupt or incompatible binary artifact.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or a broken internal invariant during computation.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace skipgan
