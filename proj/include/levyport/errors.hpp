#pragma once

#include <stdexcept>
#include <string>

namespace levyport {

// Failure modes surfaced by the library.  Codes map to CLI exit status:
// ConfigInvalid and ShapeMismatch are input errors (exit 2), the rest are
// domain errors raised during a solve or simulation (exit 3).
enum class ErrorCode {
  SolvencyViolation,
  InvalidGamma,
  EmptyPositiveSupport,
  NotPositiveDefinite,
  ShapeMismatch,
  SingularSigma,
  DegenerateCorrelation,
  NonCoercive,
  NonConvergence,
  TransversalityViolated,
  NonPositiveExcessReturn,
  OutOfRegime,
  ConfigInvalid,
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::SolvencyViolation: return "SolvencyViolation";
    case ErrorCode::InvalidGamma: return "InvalidGamma";
    case ErrorCode::EmptyPositiveSupport: return "EmptyPositiveSupport";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::SingularSigma: return "SingularSigma";
    case ErrorCode::DegenerateCorrelation: return "DegenerateCorrelation";
    case ErrorCode::NonCoercive: return "NonCoercive";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::TransversalityViolated: return "TransversalityViolated";
    case ErrorCode::NonPositiveExcessReturn: return "NonPositiveExcessReturn";
    case ErrorCode::OutOfRegime: return "OutOfRegime";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
  }
  return "UnknownError";
}

class DomainError : public std::runtime_error {
 public:
  DomainError(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace levyport
