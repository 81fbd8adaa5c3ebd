#pragma once

#include <stdexcept>
#include <string>

namespace exitnas {

/// Base for every error the engine throws.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A search-space, tuner or engine configuration is unusable.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// A caller broke an operation's precondition.
class ContractViolation : public Error {
public:
  using Error::Error;
};

/// A flat genome vector does not describe a genome of the given space.
class DecodeError : public Error {
public:
  using Error::Error;
};

class InsufficientData : public Error {
public:
  using Error::Error;
};

/// An operation needs state that has not been established (e.g. an unfitted model).
class StateError : public Error {
public:
  using Error::Error;
};

/// A trace or evaluator response violates the wire format. `field()` names
/// the first offending field or cell.
class MalformedTrace : public Error {
public:
  MalformedTrace(std::string field, const std::string& what)
      : Error("malformed trace: " + field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

class EvaluatorUnavailable : public Error {
public:
  using Error::Error;
};

} // namespace exitnas
