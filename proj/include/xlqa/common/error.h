#ifndef XLQA_COMMON_ERROR_H_
#define XLQA_COMMON_ERROR_H_

#include <stdexcept>
#include <string>

namespace xlqa {

// Violated precondition of an in-process API (bad shapes, bad arguments).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed input file. The message carries the offending path.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Well-formed input that is missing required fields.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid or inconsistent configuration. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Persisted state that does not match what the caller expects
// (checkpoint version or shape mismatch). Maps to CLI exit code 3.
class StateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace xlqa

#endif  // XLQA_COMMON_ERROR_H_
