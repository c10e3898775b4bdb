#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nlqm {

enum class ErrorKind {
  DimensionLimit,
  DimensionMismatch,
  DegenerateModel,
  DegenerateState,
  Precondition,
  Unsupported,
  BlowUp,
  Config,
  Io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionLimit: return "dimension limit";
    case ErrorKind::DimensionMismatch: return "dimension mismatch";
    case ErrorKind::DegenerateModel: return "degenerate model";
    case ErrorKind::DegenerateState: return "degenerate state";
    case ErrorKind::Precondition: return "precondition violated";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::BlowUp: return "numeric blow-up";
    case ErrorKind::Config: return "config error";
    case ErrorKind::Io: return "io error";
  }
  return "error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised when an integrator produces a non-finite component.
class BlowUpError : public Error {
 public:
  BlowUpError(std::size_t step, const std::string& what)
      : Error(ErrorKind::BlowUp, what + " at step " + std::to_string(step)), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) throw Error(kind, what);
}

}  // namespace nlqm
