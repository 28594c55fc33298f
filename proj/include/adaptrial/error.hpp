#pragma once

#include <stdexcept>
#include <string>

namespace adaptrial {

// All library failures derive from Error so callers (the CLI in particular)
// can report a single-line reason and exit nonzero.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or parameter out of range.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Linear system could not be solved (rank deficient Gram or bread matrix).
class SingularError : public Error {
 public:
  using Error::Error;
};

// A policy gradient was requested for a non-differentiable policy.
class NotDifferentiable : public Error {
 public:
  using Error::Error;
};

// Malformed input file; message names line/row and field.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace adaptrial
