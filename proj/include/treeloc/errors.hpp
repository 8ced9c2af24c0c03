#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace treeloc {

enum class ErrorCode {
  WindowOutOfRange,
  NoConvergence,
  DimensionMismatch,
  QuantizationOverflow,
  DegenerateConfiguration,
  NoValidHypothesis,
  InsufficientPairs,
  FormatError,
  SingularSystem,
  InvalidGraph,
  DensityInfeasible,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::WindowOutOfRange: return "WindowOutOfRange";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::QuantizationOverflow: return "QuantizationOverflow";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::NoValidHypothesis: return "NoValidHypothesis";
    case ErrorCode::InsufficientPairs: return "InsufficientPairs";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::InvalidGraph: return "InvalidGraph";
    case ErrorCode::DensityInfeasible: return "DensityInfeasible";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace treeloc
