#pragma once

#include <stdexcept>
#include <string>

namespace apir {

// Error taxonomy maps onto CLI exit codes: validation (2), compute (3), I/O (4).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape or extent mismatch between arguments.
struct DimensionError : Error {
  using Error::Error;
};

// Degenerate or out-of-range input values.
struct ValueError : Error {
  using Error::Error;
};

// GRAPPA calibration failures (insufficient ACS, rank deficiency).
struct CalibrationError : Error {
  using Error::Error;
};

// Operation invoked in an invalid order (e.g. backward before forward).
struct StateError : Error {
  using Error::Error;
};

// File read/write failures.
struct IoError : Error {
  using Error::Error;
};

}  // namespace apir
