#pragma once

#include <stdexcept>
#include <string>

namespace slicemon {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent experiment configuration / attribute schema.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Problems with the dataset file: missing columns, unparsable values, no usable rows.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A subgroup whose level indices do not fit the schema.
class InvalidSubgroupError : public Error {
 public:
  using Error::Error;
};

/// Subgroup has fewer rows than the support threshold.
class UnsupportedSubgroupError : public Error {
 public:
  using Error::Error;
};

/// Metric has no value on the given rows (e.g. precision with no predicted positives).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

class BudgetExhaustedError : public Error {
 public:
  using Error::Error;
};

/// Cholesky factorization failed even after jitter escalation, or a non-finite value appeared.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace slicemon
