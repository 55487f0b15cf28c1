#pragma once

#include <stdexcept>
#include <string>

namespace floral {

// Base of all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A formula cannot be evaluated at the requested time step (t outside the
// trace, or a temporal window clips to nothing).
struct EvalError : Error {
  using Error::Error;
};

// Structural mismatch: predicate channel outside the trace, missing property
// parameters, malformed interval.
struct SchemaError : Error {
  using Error::Error;
};

// Text input could not be parsed. `position` is a character offset when
// known, npos otherwise.
struct ParseError : Error {
  explicit ParseError(const std::string& what, std::size_t position = std::string::npos)
      : Error(what), position(position) {}
  std::size_t position;
};

// Numeric/data input violates a precondition (trace too short, empty batch).
struct InputError : Error {
  using Error::Error;
};

// Invalid configuration value or combination.
struct ConfigError : Error {
  using Error::Error;
};

// Caller broke an API contract (mismatched parameter tags, bad sign
// preconditions).
struct ContractError : Error {
  using Error::Error;
};

// Formula shape not supported by the requested transformation.
struct UnsupportedFormError : Error {
  using Error::Error;
};

}  // namespace floral
