#pragma once

#include <stdexcept>
#include <string>

namespace infooirt {

/// Base class for every error raised by the library. The CLI maps these to
/// exit code 1 and prints `what()` as the diagnostic.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration values or precondition violations on inputs.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed submission tables (carries the offending row when known).
class IngestionError : public Error {
 public:
  IngestionError(const std::string& message, long row = -1)
      : Error(row >= 0 ? "row " + std::to_string(row) + ": " + message : message), row_(row) {}
  long row() const noexcept { return row_; }

 private:
  long row_;
};

/// Tensor shape or dimension mismatch.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Lookup of a student or problem that the model has no parameters for.
class UnknownEntityError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint or artifact file could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace infooirt
