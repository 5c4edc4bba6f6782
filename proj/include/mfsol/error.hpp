#pragma once

#include <stdexcept>
#include <string>

namespace mfsol {

enum class ErrorKind {
  dimension_mismatch,
  invalid_argument,
  degenerate,
  singular,
  unsupported_signature,
  formula_domain,
  blow_up,
  io,
  config
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::dimension_mismatch: return "dimension mismatch";
    case ErrorKind::invalid_argument: return "invalid argument";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::singular: return "singular";
    case ErrorKind::unsupported_signature: return "unsupported signature";
    case ErrorKind::formula_domain: return "formula domain";
    case ErrorKind::blow_up: return "blow-up";
    case ErrorKind::io: return "io";
    case ErrorKind::config: return "config";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised by time steppers; carries the time of the last finite state.
class BlowUp : public Error {
 public:
  BlowUp(double t, const std::string& what)
      : Error(ErrorKind::blow_up, what + " at t=" + std::to_string(t)), time_(t) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) throw Error(kind, what);
}

}  // namespace mfsol
