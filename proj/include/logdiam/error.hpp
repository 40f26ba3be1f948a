#pragma once

#include <stdexcept>
#include <string>

namespace logdiam {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A documented precondition of an operation does not hold for its inputs.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Arithmetic mixed two different moduli.
class ModulusMismatch : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

/// An element that must be invertible is not a unit.
class NotAUnit : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

/// Malformed input files or command-line configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A search or enumeration would exceed its memory/state budget, or a
/// bounded search ran out of attempts.
class BudgetError : public Error {
 public:
  using Error::Error;
};

/// An internal consistency check failed. Seeing one means a bug.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace logdiam
