#pragma once

#include <stdexcept>
#include <string>

namespace sgtrkit {

// Base of every domain error raised by the library. The CLI maps these to
// exit code 1; anything else escaping is a bug.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand dimensions do not conform.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A count or index argument violates an operation's precondition.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Input is mathematically degenerate (zero-norm vector, empty set, ...).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// A JSON document failed to parse or does not follow the expected schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Parsed value breaks a domain invariant (non-normalized ProbVector, w <= 0, ...).
class InvariantError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// A metric is not defined for the given input (e.g. recall over zero GT).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

}  // namespace sgtrkit
