#pragma once

#include <stdexcept>

namespace impact {

// Non-finite evaluation or an expectation too large for direct evaluation.
// The message points the caller at a log-sum-exp form or a smaller position.
class OverflowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Requested computation lies outside the engine's supported envelope
// (e.g. tensor quadrature beyond its dimension cap).
class UnsupportedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Traded price admits no finite optimal demand.
class NoFiniteDemandError : public SolverError {
 public:
  using SolverError::SolverError;
};

}  // namespace impact
