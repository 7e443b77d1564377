#pragma once

#include <stdexcept>

namespace acit {

// Base for every library error. The CLI maps subclasses onto its exit-code
// contract: usage/config -> 1, data/format -> 2, numeric failure -> 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape or extent mismatch between tensors; the message names both shapes.
struct DimensionError : Error {
  using Error::Error;
};

// An API was called outside its contract (non-scalar loss, wrong clip length).
struct ContractError : Error {
  using Error::Error;
};

// Invalid configuration value or combination (indivisible head count, ...).
struct ConfigError : Error {
  using Error::Error;
};

// Malformed file content: TSR tensors, manifests, checkpoints.
struct FormatError : Error {
  using Error::Error;
};

// Well-formed input that violates a data invariant (bbox ordering, split leak).
struct ValidationError : Error {
  using Error::Error;
};

// Filesystem failure; the message names the path.
struct IoError : Error {
  using Error::Error;
};

// NaN/Inf reached a value that must stay finite.
struct NumericError : Error {
  using Error::Error;
};

}  // namespace acit
