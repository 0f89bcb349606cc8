#ifndef MULTIBIN_ERRORS_HPP
#define MULTIBIN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace multibin {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor/vector dimension disagreement. Message names both lengths.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Caller violated a documented precondition (empty batch, K out of range, ...).
class UsageError : public Error {
 public:
  using Error::Error;
};

// On-disk data could not be decoded (bad magic, truncation, count mismatch).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Invalid or incomplete configuration (config file, manifest, missing model).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Numerical breakdown during training (NaN/inf loss).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace multibin

#endif  // MULTIBIN_ERRORS_HPP
