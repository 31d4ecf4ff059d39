#pragma once

#include <stdexcept>
#include <string>

namespace antibunch {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter violates a documented invariant or precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Data that cannot be explained by the model, e.g. a measured g2 below the
/// background floor.
class InconsistentInput : public Error {
 public:
  using Error::Error;
};

class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

/// Malformed time-tag file.
class FormatError : public Error {
 public:
  enum class Kind { bad_magic, bad_version, truncated, unsorted, reserved_nonzero, io };

  FormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Scenario/config validation failure, tagged with the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Failure inside one pipeline stage; `stage()` names it.
class PipelineError : public Error {
 public:
  PipelineError(std::string stage, const std::string& message)
      : Error(stage + ": " + message), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

inline void require(bool condition, const char* message) {
  if (!condition) throw InvalidArgument(message);
}

}  // namespace antibunch
