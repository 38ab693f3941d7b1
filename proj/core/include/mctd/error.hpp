#pragma once

#include <stdexcept>
#include <string>

namespace mctd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition of an operation was violated by the caller.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// A RunConfig invariant does not hold. `field()` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// An expert could not produce a reply (transport down, backend crash, ...).
class ExpertFailure : public Error {
 public:
  ExpertFailure(std::string expert_id, const std::string& what)
      : Error("expert '" + expert_id + "': " + what), expert_id_(std::move(expert_id)) {}
  const std::string& expert_id() const noexcept { return expert_id_; }

 private:
  std::string expert_id_;
};

/// A remote expert answered with a record that breaks the wire contract.
class ProtocolViolation : public ExpertFailure {
 public:
  ProtocolViolation(std::string expert_id, std::string field, const std::string& what)
      : ExpertFailure(std::move(expert_id), "protocol violation in '" + field + "': " + what),
        field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// A critic failed while scoring a sequence.
class EvaluationError : public Error {
 public:
  EvaluationError(std::string critic, const std::string& what)
      : Error("critic '" + critic + "': " + what), critic_(std::move(critic)) {}
  const std::string& critic() const noexcept { return critic_; }

 private:
  std::string critic_;
};

#define MCTD_EXPECTS(cond, msg)                  \
  do {                                           \
    if (!(cond)) throw ::mctd::ContractViolation(msg); \
  } while (0)

}  // namespace mctd
