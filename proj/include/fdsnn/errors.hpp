#pragma once

#include <stdexcept>
#include <string>

namespace fdsnn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Value outside the admissible domain of an operation (plaintext out of Z_p, non-bit RGSW input).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Mismatched dimensions, moduli or shapes.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// A parameter set that cannot host the requested computation.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

// Plaintext oracle value escaped the configured message range.
class OverflowError : public Error {
 public:
  using Error::Error;
};

// Malformed or mismatched serialized data.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace fdsnn
