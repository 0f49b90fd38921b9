#pragma once

#include <stdexcept>
#include <string>

namespace au2vec {

/// Base for every error raised by the library. The CLI maps the concrete
/// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad CSV, bad magic number, truncated binary store.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Binary store written by an incompatible format version.
class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// A precondition on an argument was violated.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Non-finite parameters, singular systems and similar numeric failures.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A metric is undefined for its input (e.g. correlation of a constant).
class DegenerateMetricError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Unknown token name or id.
class LookupError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace au2vec
