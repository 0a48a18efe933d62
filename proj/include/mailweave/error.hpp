#pragma once

#include <cstddef>
#include <set>
#include <stdexcept>
#include <string>

namespace mailweave {

/// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The input stream or a file could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// An archive could not be ingested as a whole (individual bad messages are
/// reported in IngestReport instead).
class IngestError : public IoError {
 public:
  using IoError::IoError;
};

class AddressError : public Error {
 public:
  using Error::Error;
};

class DateError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// start > end on a dated interval.
class IntervalError : public Error {
 public:
  using Error::Error;
};

/// Unknown or already superseded annotation.
class AnnotationError : public Error {
 public:
  using Error::Error;
};

/// A record violates the stored-record invariants, or XML text does not
/// follow the record layout.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class ExportError : public Error {
 public:
  using Error::Error;
};

class ConflictError : public Error {
 public:
  using Error::Error;
};

/// Error carrying a 1-based text position.
class PositionedError : public Error {
 public:
  PositionedError(const std::string& what, std::size_t line, std::size_t column)
      : Error(what + " at line " + std::to_string(line) + ", column " +
              std::to_string(column)),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Malformed XML text.
class XmlError : public PositionedError {
 public:
  using PositionedError::PositionedError;
};

/// Query text that does not match the grammar.
class SyntaxError : public PositionedError {
 public:
  SyntaxError(const std::string& what, std::size_t line, std::size_t column,
              std::set<std::string> expected)
      : PositionedError(what, line, column), expected_(std::move(expected)) {}

  const std::set<std::string>& expected() const noexcept { return expected_; }

 private:
  std::set<std::string> expected_;
};

/// Query that parses but refers to an unknown field or compares a field
/// with a literal of the wrong type.
class QueryError : public PositionedError {
 public:
  enum class Kind { unknown_field, type_mismatch, invalid };

  QueryError(Kind kind, const std::string& what, std::size_t line, std::size_t column)
      : PositionedError(what, line, column), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace mailweave
