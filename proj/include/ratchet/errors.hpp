#pragma once

#include <stdexcept>
#include <string>

namespace ratchet {

// Base for every error the library raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters or configuration (bad ranges, missing fields).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Valid parameters for which an operation is not defined (e.g. consumer
// surplus under nonlinear demand, closed forms outside their domain).
class UnsupportedConfiguration : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of a function.
class DomainError : public Error {
 public:
  using Error::Error;
};

// The nonlinear first-order condition has no sign change on its bracket.
class InteriorRegimeViolated : public Error {
 public:
  using Error::Error;
};

// Fatal problem reading a price archive.
class ArchiveError : public Error {
 public:
  using Error::Error;
};

}  // namespace ratchet
