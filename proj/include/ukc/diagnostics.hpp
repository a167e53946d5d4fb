#pragma once

#include <stdexcept>
#include <string>

namespace ukc {

/// Base class for every error raised by the compiler or the simulator.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed IR text. Carries the 1-based position of the offending token.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, int line, int column)
      : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// A pass or lowering could not handle its input.
class CompileError : public Error {
 public:
  using Error::Error;
};

/// The register allocator ran out of registers (there is no spilling).
class OutOfRegisters : public CompileError {
 public:
  using CompileError::CompileError;
};

/// Raised by the assembler front-end and the simulator.
class SimError : public Error {
 public:
  using Error::Error;
};

}  // namespace ukc
