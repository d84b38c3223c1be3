#pragma once

#include <stdexcept>
#include <string>

namespace hdnn {

// Base class for all library failures surfaced to callers.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Shape or dimension contract violations.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid argument values (negative stddev, out-of-range rates, bad labels).
class ValueError : public Error {
 public:
  using Error::Error;
};

// Filesystem failures: missing files, unwritable paths.
class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed text input; message carries file/line/column context.
class ParseError : public Error {
 public:
  using Error::Error;
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what) {}
  ParseError(const std::string& file, std::size_t line, std::size_t column,
             const std::string& what)
      : Error(file + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what) {}
};

// Corrupt, truncated, or unsupported checkpoint files.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace hdnn
