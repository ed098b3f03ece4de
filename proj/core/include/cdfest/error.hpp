#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cdfest {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument violates an operation's precondition (NaN input, sentinel where a
/// finite value is required, dimension mismatch, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A request exceeds a hard capacity guard (e.g. 2^d corner enumeration).
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Malformed persisted artifact (model file, workload file, schema file).
class FormatError : public Error {
 public:
  using Error::Error;
};

class VersionMismatch : public FormatError {
 public:
  using FormatError::FormatError;
};

class CorruptFile : public FormatError {
 public:
  using FormatError::FormatError;
};

class SchemaMismatch : public FormatError {
 public:
  using FormatError::FormatError;
};

/// CSV or query-text parse failure. `row()` is 1-based over data rows (0 when not
/// tied to a row).
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t row = 0) : Error(message), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class UnknownColumn : public Error {
 public:
  explicit UnknownColumn(const std::string& column)
      : Error("unknown column '" + column + "'"), column_(column) {}
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

/// Training diverged: the loss became non-finite.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& message, std::size_t epoch, std::size_t batch)
      : Error(message), epoch_(epoch), batch_(batch) {}
  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t batch() const noexcept { return batch_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
};

}  // namespace cdfest
