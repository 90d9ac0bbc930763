#pragma once

#include <stdexcept>
#include <string>

namespace condmon {

// Error taxonomy mirrors the CLI exit codes: 2 argument, 3 data, 4 model.
struct ArgError : std::runtime_error {
  explicit ArgError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ModelError : std::runtime_error {
  explicit ModelError(const std::string& msg) : std::runtime_error(msg) {}
};

// Dimension disagreement between tensors, windows or architectures.
struct ShapeError : ModelError {
  explicit ShapeError(const std::string& msg) : ModelError(msg) {}
};

}  // namespace condmon
