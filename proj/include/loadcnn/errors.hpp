#pragma once

#include <stdexcept>

namespace loadcnn {

// Rank or dimension disagreement between tensors and layer specs.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Argument outside its documented range (negative power, index out of range, ...).
struct ValueError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Malformed or inconsistent input data: parse failures, corrupt checkpoint
// files, infeasible split specs, id-map mismatches.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite values produced during optimization.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace loadcnn
