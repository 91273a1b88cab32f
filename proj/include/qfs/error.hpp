#pragma once

#include <stdexcept>
#include <string>

namespace qfs {

// Base for every error raised by the library. The subclasses map onto the
// CLI's exit codes (see cli.hpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or semantically invalid input data.
class DataError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration or argument values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// File system failures.
class IoError : public Error {
 public:
  using Error::Error;
};

// The solver could not produce a feasible answer.
class SolverError : public Error {
 public:
  using Error::Error;
};

// Violated internal invariant; indicates a bug rather than bad input.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace qfs
