#pragma once

#include <stdexcept>
#include <string>

namespace bipmatch {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Matrix/vector size mismatches.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid argument values (probabilities out of range, negative counts, NaNs).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Problem size exceeds an enumeration cap (2^n state spaces, n! searches).
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Model-family mismatches and degenerate model setups.
class ModelError : public Error {
 public:
  using Error::Error;
};

// Numerical solver failures (factorization, unbounded objective, no convergence).
class SolverError : public Error {
 public:
  using Error::Error;
};

// Inconsistent seed correspondences.
class SeedError : public Error {
 public:
  using Error::Error;
};

// Malformed input files.
class DataError : public Error {
 public:
  using Error::Error;
};

// Invalid experiment/CLI configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace bipmatch
