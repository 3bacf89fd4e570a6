#ifndef OBLIVION_ERRORS_HPP
#define OBLIVION_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace oblivion {

// Dimension or width of an input does not match what the model expects.
struct InputShapeError : std::runtime_error {
  explicit InputShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// A required piece of state is missing or inconsistent (empty dataset,
// unpopulated probabilities, mismatched tables, ...).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Arguments outside the mathematical domain of an operation.
struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

// Hard size limits (players > 20 in brute force, k > 60 in the engine, ...).
struct CapacityError : std::runtime_error {
  explicit CapacityError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed file contents; message names the offending path/line.
struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// A game evaluation hit undefined state (zero-coverage tree node).
struct EvaluationError : std::runtime_error {
  explicit EvaluationError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace oblivion

#endif
