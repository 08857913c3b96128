#pragma once

#include <stdexcept>
#include <string>

namespace stepsearch {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- tree / trajectory errors ---
struct UnknownNode : Error {
  explicit UnknownNode(int id) : Error("unknown node id " + std::to_string(id)) {}
};
struct ValueOutOfRange : Error {
  explicit ValueOutOfRange(double v)
      : Error("value " + std::to_string(v) + " outside [-1, 1]") {}
};
struct NotTerminal : Error {
  NotTerminal() : Error("trajectory has no final answer") {}
};
struct AlreadyExpanded : Error {
  explicit AlreadyExpanded(int id) : Error("node " + std::to_string(id) + " already expanded") {}
};
struct DepthExceeded : Error {
  explicit DepthExceeded(int id) : Error("node " + std::to_string(id) + " is at maximum depth") {}
};
struct TooShort : Error {
  explicit TooShort(std::size_t n)
      : Error("rejected trajectory of " + std::to_string(n) + " steps cannot be segmented") {}
};

// --- oracle errors ---
struct OracleError : Error {
  using Error::Error;
};
struct PolicyUnavailable : OracleError {
  using OracleError::OracleError;
};
struct ValueUnavailable : OracleError {
  using OracleError::OracleError;
};
struct RetrieverUnavailable : OracleError {
  using OracleError::OracleError;
};
struct ReflectionUnavailable : OracleError {
  using OracleError::OracleError;
};
struct ScorerUnavailable : OracleError {
  using OracleError::OracleError;
};
struct InvalidQuery : OracleError {
  using OracleError::OracleError;
};

// --- numeric / IO errors ---
struct NonFinite : Error {
  NonFinite() : Error("non-finite loss input") {}
};
struct ConfigError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};
struct SchemaError : Error {
  using Error::Error;
};

}  // namespace stepsearch
