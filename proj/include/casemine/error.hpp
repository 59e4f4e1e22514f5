#ifndef CASEMINE_ERROR_HPP
#define CASEMINE_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace casemine {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Syntax error in a concept expression or a knowledge-base file.
/// `line` is 1-based (0 when the input is a single expression), `column` is 1-based (both 0 when no location applies).
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& message) : ParseError(message, 0, 0) {}
  ParseError(const std::string& message, std::size_t line, std::size_t column)
      : Error(format(message, line, column)), detail_(message), line_(line), column_(column) {}

  /// Message without the location prefix.
  const std::string& detail() const { return detail_; }
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  static std::string format(const std::string& message, std::size_t line, std::size_t column) {
    if (line == 0 && column == 0) return message;
    if (line == 0) return "column " + std::to_string(column) + ": " + message;
    return "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message;
  }

  std::string detail_;
  std::size_t line_;
  std::size_t column_;
};

/// Recognized but unsupported construct (disjunction, negation, other comparators, ...).
class UnsupportedConstruct : public ParseError {
 public:
  using ParseError::ParseError;
};

/// A well-formed input that violates a semantic rule of the fragment.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class CyclicDefinition : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Property sets built over different universes were combined.
class UniverseMismatch : public Error {
 public:
  using Error::Error;
};

class MiningError : public Error {
 public:
  using Error::Error;
};

class EmptyDatabase : public MiningError {
 public:
  EmptyDatabase() : MiningError("transaction database is empty") {}
};

/// Time budget or result cap exhausted; partial results are discarded.
class BudgetExceeded : public MiningError {
 public:
  using MiningError::MiningError;
};

class Interrupted : public Error {
 public:
  Interrupted() : Error("interrupted") {}
};

/// Operation not allowed in the current state (missing input, bad transition, ...).
class StateError : public Error {
 public:
  using Error::Error;
};

class Conflict : public StateError {
 public:
  using StateError::StateError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// The service could not listen on the requested address.
class BindError : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace casemine

#endif  // CASEMINE_ERROR_HPP
