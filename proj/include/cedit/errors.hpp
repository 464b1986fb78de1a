#pragma once

#include <stdexcept>
#include <string>

namespace cedit {

// Base of every error raised by the engine. Subclasses map onto the CLI exit
// codes: data problems exit 3, backend problems exit 2, usage problems exit 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BoundsError : public Error {
 public:
  using Error::Error;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

class LabelError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

class IncompleteInfillError : public Error {
 public:
  using Error::Error;
};

class InvalidContrastError : public Error {
 public:
  using Error::Error;
};

class UndefinedOverlapError : public Error {
 public:
  using Error::Error;
};

// Malformed file content. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Transport failure after retries were exhausted, or a non-retryable HTTP status.
class BackendError : public Error {
 public:
  using Error::Error;
};

// The remote side answered, but the payload violates a backend contract.
class ProtocolError : public BackendError {
 public:
  using BackendError::BackendError;
};

}  // namespace cedit
