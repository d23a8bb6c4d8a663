#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace inrseg {

// Shapes that do not line up (matmul inner dims, elementwise operands, ...).
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Value outside a function's domain, e.g. log of a non-positive entry.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed caller input: non-finite coordinates, non one-hot labels, bad config values.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Configuration file or flag problem. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dataset/file problem (missing file, bad NPY header, bad mask). Maps to exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingFileError : public DataError {
 public:
  using DataError::DataError;
};

class NpyFormatError : public DataError {
 public:
  using DataError::DataError;
};

class MaskClassError : public DataError {
 public:
  using DataError::DataError;
};

class ExtentMismatchError : public DataError {
 public:
  using DataError::DataError;
};

// Loss became non-finite while optimizing. Maps to exit code 4.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::size_t step)
      : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace inrseg
