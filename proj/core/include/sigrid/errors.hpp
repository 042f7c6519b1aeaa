#pragma once

#include <stdexcept>

namespace sigrid {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File could not be opened, read, or written.
struct IoError : Error {
  using Error::Error;
};

// File content violates the declared format.
struct FormatError : Error {
  using Error::Error;
};

// Arguments violate an operation's preconditions.
struct DomainError : Error {
  using Error::Error;
};

// Numerical failure: singular pivot, divergence, non-finite values.
struct NumericError : Error {
  using Error::Error;
};

}  // namespace sigrid
