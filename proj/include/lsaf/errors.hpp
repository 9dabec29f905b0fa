#pragma once

#include <stdexcept>
#include <string>

namespace lsaf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes that cannot be combined.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid hyperparameters or layer geometry.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an API precondition (non-scalar loss, missing gradient...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Malformed raster or checkpoint file.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Modalities of one scene are not co-registered.
class RegistrationError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// File system failure (cannot open, cannot write).
class IoError : public Error {
 public:
  using Error::Error;
};

/// Stratified split impossible for the given labels.
class StratificationError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Non-finite values encountered during computation.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace lsaf
