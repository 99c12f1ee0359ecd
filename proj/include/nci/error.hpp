#pragma once

#include <stdexcept>
#include <string>

namespace nci {

// Error taxonomy shared by the C++ core, the C API status codes, and the
// CLI exit-code contract (0 success, 1 internal/numerical, 2 user/config).
enum class ErrorKind {
  Io,
  Parse,
  Validation,
  Reference,
  Parameter,
  Capability,
  Constraint,
  Degenerate,
  Numerical,
  InsufficientData,
  UndefinedCorrelation,
  Internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return "io";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Reference: return "reference";
    case ErrorKind::Parameter: return "parameter";
    case ErrorKind::Capability: return "capability";
    case ErrorKind::Constraint: return "constraint";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::Numerical: return "numerical";
    case ErrorKind::InsufficientData: return "insufficient-data";
    case ErrorKind::UndefinedCorrelation: return "undefined-correlation";
    case ErrorKind::Internal: return "internal";
  }
  return "unknown";
}

// Exit-code contract: 2 for anything the user can fix in inputs or config,
// 1 for numerical/degenerate conditions discovered while computing.
inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Degenerate:
    case ErrorKind::Numerical:
    case ErrorKind::UndefinedCorrelation:
    case ErrorKind::Internal:
      return 1;
    default:
      return 2;
  }
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace nci
