#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace compskill {

/// A caller broke a documented precondition (arity, aux kind, ranges, ids).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Sampling could not satisfy its constraints within the retry budget.
class GenerationExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ground-truth evaluation produced a string above the hard safety cap.
class EvaluationOverflow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArithmeticOverflow : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

class DivisionByZero : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed input data. `line()` is 1-based, or 0 when not line-oriented.
class DataError : public std::runtime_error {
 public:
  DataError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TransportError : public std::runtime_error {
 public:
  TransportError(const std::string& what, std::size_t prompt_index, int status = 0)
      : std::runtime_error(what), prompt_index_(prompt_index), status_(status) {}

  std::size_t prompt_index() const noexcept { return prompt_index_; }
  /// HTTP status, or 0 for connection-level failures.
  int status() const noexcept { return status_; }

 private:
  std::size_t prompt_index_;
  int status_;
};

}  // namespace compskill
