#pragma once

#include <stdexcept>
#include <string>

namespace prnet {

/// Base class for every error thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Operand shapes are incompatible (channel/extent mismatch).
struct DimensionError : Error {
  using Error::Error;
};

/// Convolution geometry does not produce an integer output extent.
struct GeometryError : Error {
  using Error::Error;
};

/// An API contract was violated (non-scalar loss, reused tape, ...).
struct ContractError : Error {
  using Error::Error;
};

/// NaN/Inf encountered where all values must be finite.
struct NumericError : Error {
  using Error::Error;
};

/// Malformed file (checkpoint, PNG); message names the byte offset.
struct FormatError : Error {
  using Error::Error;
};

/// Invalid or inconsistent configuration.
struct ConfigError : Error {
  using Error::Error;
};

/// Filesystem / OS level failure.
struct IoError : Error {
  using Error::Error;
};

}  // namespace prnet
