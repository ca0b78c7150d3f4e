#pragma once

#include <stdexcept>
#include <string>

namespace sysrisk {

enum class ErrorKind {
  InvalidParameter,
  Resolution,
  Domain,
  Configuration,
  Validation,
  NumericalDivergence,
  StepSize,
  SchemeInstability,
  StatisticalPower,
  InsufficientData,
  Io,
};

const char* to_string(ErrorKind kind);

// Process exit code for a failure of this kind: 2 validation, 3 numerical
// divergence, 4 statistical power.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace sysrisk
