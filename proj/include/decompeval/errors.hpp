#pragma once

#include <stdexcept>
#include <string>

namespace decompeval {

// Base of every error raised by the library. The CLI maps the concrete
// subclasses onto exit codes (config 2, backend 3, data 4).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid dimension spec, flag combination, or template.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
};

// A field referenced by a dimension spec is absent from the sample.
class MissingFieldError : public DataError {
 public:
  explicit MissingFieldError(const std::string& field)
      : DataError("missing field " + field), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Input is well-formed but carries no usable signal (empty text, zero
// variance, all pairs tied, ...).
class DegenerateInputError : public DataError {
 public:
  using DataError::DataError;
};

// The prompt cannot be brought under the character budget without touching
// protected parts.
class BudgetExceededError : public DataError {
 public:
  using DataError::DataError;
};

// Transport failure, bad status, or malformed response from a scoring
// backend.
class BackendError : public Error {
 public:
  using Error::Error;
};

// Both answer words came back with zero probability, so the yes/no ratio is
// undefined. Signals a broken backend rather than a neutral answer.
class DegenerateProbabilityError : public BackendError {
 public:
  using BackendError::BackendError;
};

enum class ErrorKind { config, data, backend, other };

inline ErrorKind error_kind(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return ErrorKind::config;
  if (dynamic_cast<const DataError*>(&e)) return ErrorKind::data;
  if (dynamic_cast<const BackendError*>(&e)) return ErrorKind::backend;
  return ErrorKind::other;
}

}  // namespace decompeval
