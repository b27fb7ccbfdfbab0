#pragma once

#include <stdexcept>
#include <string>

namespace comets {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of a function.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Precondition of an operation violated by the caller.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// CSV ingestion errors.
class ParseError : public Error {
 public:
  using Error::Error;
};

class MissingValueError : public ParseError {
 public:
  using ParseError::ParseError;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

// Column role assignment does not fit the dataset.
class RoleError : public Error {
 public:
  using Error::Error;
};

// Invalid engine specification or hyperparameter.
class SpecError : public Error {
 public:
  using Error::Error;
};

// Residual products carry no variance, so a self-normalised statistic is undefined.
class DegenerateResiduals : public Error {
 public:
  using Error::Error;
};

}  // namespace comets
