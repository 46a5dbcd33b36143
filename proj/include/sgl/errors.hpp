#pragma once

#include <stdexcept>
#include <string>

namespace sgl {

// Base class for every error raised by the library. The CLI maps
// ValidationError subclasses to exit code 1 and everything else to 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// Tensor shapes that do not agree with the game.
class DimensionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Malformed game / policy / config input.
class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// A point outside the reduced policy set.
class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Caller broke an operation precondition (e.g. multi-player deviation).
class ContractError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// The induced chain has no unique positive stationary distribution.
class ErgodicityError : public Error {
 public:
  using Error::Error;
};

// Query radius incompatible with the safety net.
class ScheduleError : public Error {
 public:
  using Error::Error;
};

}  // namespace sgl
