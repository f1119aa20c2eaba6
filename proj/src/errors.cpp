#include "oscdrift/errors.hpp"

namespace oscdrift {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::NonPositiveDelta: return "NonPositiveDelta";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::NotAFoldPoint: return "NotAFoldPoint";
    case ErrorKind::CapExceeded: return "CapExceeded";
    case ErrorKind::DynamicRangeExceeded: return "DynamicRangeExceeded";
    case ErrorKind::SingularMass: return "SingularMass";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::ZeroFunction: return "ZeroFunction";
    case ErrorKind::SweepExhausted: return "SweepExhausted";
    case ErrorKind::StepUnstable: return "StepUnstable";
    case ErrorKind::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace oscdrift
