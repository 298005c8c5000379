#pragma once

#include <stdexcept>
#include <string>

namespace spinboson {

/// Base of every error thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid user-supplied configuration (grid sizes, radii, unknown keys).
struct ConfigError : Error {
  using Error::Error;
};

/// Model data violating a structural invariant (negative dispersion, ...).
struct ModelError : Error {
  using Error::Error;
};

/// Argument outside the domain of a function, e.g. z >= sigma*eps.
struct DomainError : Error {
  using Error::Error;
};

/// Root bracketing, eigensolver or consistency failure.
struct NumericalError : Error {
  using Error::Error;
};

/// Caller misuse such as mismatched vector lengths.
struct UsageError : Error {
  using Error::Error;
};

}  // namespace spinboson
