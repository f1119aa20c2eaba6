#pragma once

#include <stdexcept>
#include <string>

namespace oscdrift {

enum class ErrorKind {
  NonPositiveDelta,
  InvalidParams,
  NotAFoldPoint,
  CapExceeded,
  DynamicRangeExceeded,
  SingularMass,
  NoConvergence,
  ZeroFunction,
  SweepExhausted,
  StepUnstable,
  ParseError,
};

const char* to_string(ErrorKind kind) noexcept;

/// Base exception for every failure raised by the library. The kind lets
/// callers (the CLI in particular) map failures onto exit codes without
/// string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace oscdrift
