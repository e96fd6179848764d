#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cellflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A required column is missing from a delimited-text header.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// A malformed field; `line()` is 1-based and counts the header row.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Endpoint inference could not pick a tower address.
class AmbiguityError : public Error {
 public:
  using Error::Error;
};

/// Shapes or dimensions of two operands disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A forward pass or a training step produced NaN/Inf.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace cellflow
