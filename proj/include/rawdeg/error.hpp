#pragma once

#include <stdexcept>
#include <string>

namespace rawdeg {

/// Base of every error raised by the library. The CLI maps subclasses onto
/// distinct exit statuses.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Out-of-range numeric argument (sigma <= 0, gain > 1, ...).
class ParameterError : public Error {
public:
  using Error::Error;
};

/// Shapes that do not fit together (odd mosaic, kernel larger than plane).
class DimensionError : public Error {
public:
  using Error::Error;
};

/// Data that violates a type invariant (black >= white, bad manifest).
class ValidationError : public Error {
public:
  using Error::Error;
};

/// Malformed file contents: bad magic, truncated payload, parse failure.
class FormatError : public Error {
public:
  using Error::Error;
};

/// Filesystem failures.
class IoError : public Error {
public:
  using Error::Error;
};

/// A degradation record that cannot be replayed.
class ReplayError : public Error {
public:
  using Error::Error;
};

}  // namespace rawdeg
