#pragma once

#include <stdexcept>
#include <string>

namespace vqel {

// Shape mismatches between operands.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Inputs outside an operation's mathematical domain (e.g. log of a non-positive value).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Invalid scalar parameters such as a non-positive temperature or learning rate.
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Vectors too close to zero to normalize.
struct DegenerateInputError : std::domain_error {
  using std::domain_error::domain_error;
};

// API misuse: calling backward on a non-scalar, missing log-probabilities, ...
struct UsageError : std::logic_error {
  using std::logic_error::logic_error;
};

// Malformed data handed to a module (e.g. a broken one-hot encoding).
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Invalid experiment configuration.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// NaN or Inf produced during training.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Unreadable or unwritable files.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace vqel
