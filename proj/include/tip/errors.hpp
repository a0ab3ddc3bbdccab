#pragma once

#include <stdexcept>
#include <string>

namespace tip {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two grid functions (or a density and a grid) live on different domains.
class DomainMismatch : public Error {
 public:
  using Error::Error;
};

/// A documented precondition was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Grid too coarse for the requested construction.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

/// Density rejected by the square-integrability diagnostic.
class NotSquareIntegrable : public Error {
 public:
  using Error::Error;
};

/// Behaviour direction undefined: the two actions have identical utilities.
class IndistinctActions : public Error {
 public:
  using Error::Error;
};

/// Malformed input document. Carries the offending field path.
class SchemaError : public Error {
 public:
  SchemaError(std::string field, const std::string& reason)
      : Error("schema error at '" + field + "': " + reason), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace tip
