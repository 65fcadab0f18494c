#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace loadsynth {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text; carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Persisted model could not be read back (version, checksum, truncation).
class ModelFormatError : public Error {
 public:
  using Error::Error;
};

/// Raised when sampling reaches a context with no stored row. Unreachable
/// for models produced by the trainers in this library.
class ClosureViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace loadsynth
