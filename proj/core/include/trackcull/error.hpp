#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace trackcull {

/// Base of every error thrown by the library. The CLI maps subclasses of
/// DataError to exit code 2 and anything else to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Errors caused by bad input data or files rather than by a bug.
class DataError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public DataError {
 public:
  using DataError::DataError;
};

/// An event has no cluster in some super-layer, so no 6-cluster candidate exists.
class IncompleteEventError : public DataError {
 public:
  IncompleteEventError(long long event_id, int superlayer)
      : DataError("incomplete event " + std::to_string(event_id) + ": super-layer " +
                  std::to_string(superlayer) + " has no clusters"),
        event_id_(event_id),
        superlayer_(superlayer) {}

  long long event_id() const noexcept { return event_id_; }
  int superlayer() const noexcept { return superlayer_; }

 private:
  long long event_id_;
  int superlayer_;
};

class IoError : public DataError {
 public:
  using DataError::DataError;
};

/// Malformed text input. line() is 1-based; 0 means the position is unknown.
class ParseError : public DataError {
 public:
  ParseError(const std::string& detail, std::size_t line, const std::string& source = {})
      : DataError(format(detail, line, source)), detail_(detail), line_(line) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  static std::string format(const std::string& detail, std::size_t line, const std::string& source) {
    std::string prefix = source;
    if (line > 0) prefix += (prefix.empty() ? "line " : ":") + std::to_string(line);
    return prefix.empty() ? detail : prefix + ": " + detail;
  }

  std::string detail_;
  std::size_t line_;
};

class NoNegativeError : public DataError {
 public:
  using DataError::DataError;
};

class DataIntegrityError : public DataError {
 public:
  using DataError::DataError;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class ModelError : public DataError {
 public:
  using DataError::DataError;
};

class ModelParseError : public ModelError {
 public:
  using ModelError::ModelError;
};

class ModelVersionError : public ModelError {
 public:
  using ModelError::ModelError;
};

class ModelKindError : public ModelError {
 public:
  using ModelError::ModelError;
};

/// Parameters of a loaded or constructed model are internally inconsistent.
class ModelCorruptError : public ModelError {
 public:
  using ModelError::ModelError;
};

}  // namespace trackcull
