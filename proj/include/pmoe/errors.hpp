#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pmoe {

// Base for every error raised by the library. `component()` names the module
// that failed so the CLI can report it.
class Error : public std::runtime_error {
 public:
  Error(std::string component, const std::string& what)
      : std::runtime_error(component + ": " + what), component_(std::move(component)) {}
  const std::string& component() const { return component_; }

 private:
  std::string component_;
};

class DimensionError : public Error {
 public:
  DimensionError(std::size_t expected, std::size_t actual)
      : Error("core_model", "dimension mismatch: expected d=" + std::to_string(expected) +
                                ", got " + std::to_string(actual)),
        expected_(expected),
        actual_(actual) {}
  std::size_t expected() const { return expected_; }
  std::size_t actual() const { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Text input errors. Line/column are 1-based; 0 means "not applicable".
class ParseError : public Error {
 public:
  ParseError(std::string component, const std::string& what, std::size_t line, std::size_t column)
      : Error(std::move(component), what + " (line " + std::to_string(line) + ", column " +
                                        std::to_string(column) + ")"),
        line_(line),
        column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

// Raised by the feasible-set projection when no multiplier up to the cap
// yields a feasible gate vector.
class ConstraintUnattainable : public SolverError {
 public:
  explicit ConstraintUnattainable(const std::string& what) : SolverError("solvers", what) {}
};

}  // namespace pmoe
