// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace ektf {

/// Base class of every error raised by the library. The CLI maps the
/// concrete subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration: bad keys, values or combinations.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or missing input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Optimization diverged or produced non-finite values.
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Tensor shapes do not conform.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A metric is undefined for the given inputs (e.g. AUC on one class).
class MetricError : public Error {
 public:
  using Error::Error;
};

/// API misuse, such as replaying a consumed forward trace.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace ektf
