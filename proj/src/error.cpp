#include "error.hpp"

namespace sysrisk {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidParameter: return "invalid-parameter";
    case ErrorKind::Resolution: return "resolution";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Configuration: return "configuration";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::NumericalDivergence: return "numerical-divergence";
    case ErrorKind::StepSize: return "step-size";
    case ErrorKind::SchemeInstability: return "scheme-instability";
    case ErrorKind::StatisticalPower: return "statistical-power";
    case ErrorKind::InsufficientData: return "insufficient-data";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NumericalDivergence:
    case ErrorKind::StepSize:
    case ErrorKind::SchemeInstability:
      return 3;
    case ErrorKind::StatisticalPower:
    case ErrorKind::InsufficientData:
      return 4;
    default:
      return 2;
  }
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + " error: " + message), kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace sysrisk
