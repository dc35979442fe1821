#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lbarn {

// Error taxonomy. The CLI maps each kind onto its own exit code.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad flags, unreadable paths, inconsistent hyperparameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data and model files.
class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& what)
      : DataError("line " + std::to_string(line) + ", column " +
                  std::to_string(column) + ": " + what),
        line_(line),
        column_(column),
        detail_(what) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }
  const std::string& detail() const { return detail_; }

 private:
  std::size_t line_;
  std::size_t column_;
  std::string detail_;
};

// An internal consistency check failed; indicates a bug or a corrupted model.
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace lbarn
