#ifndef ECG_COMMON_ERROR_H_
#define ECG_COMMON_ERROR_H_

#include <stdexcept>
#include <string>

namespace ecg {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible tensor or embedding shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Sequence longer than a model or format allows.
class LengthError : public Error {
 public:
  using Error::Error;
};

// Malformed or truncated files, bad magic numbers, duplicate ids.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Non-finite values or failed numerical checks.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// A caller broke a precondition (bad argument, empty input, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

}  // namespace ecg

#endif  // ECG_COMMON_ERROR_H_
