#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace obstacle_path {

enum class ErrorCode {
  InfeasibleEndpoints,
  InfeasiblePoint,
  NonConvergence,
  DegenerateGradient,
  NotTangent,
  DegenerateCurve,
  NotConstantSpeed,
  NonConvex,
  EmptyInput,
  InsufficientData,
  InvalidArgument,
  ParseError,
  ConfigError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InfeasibleEndpoints: return "InfeasibleEndpoints";
    case ErrorCode::InfeasiblePoint: return "InfeasiblePoint";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::DegenerateGradient: return "DegenerateGradient";
    case ErrorCode::NotTangent: return "NotTangent";
    case ErrorCode::DegenerateCurve: return "DegenerateCurve";
    case ErrorCode::NotConstantSpeed: return "NotConstantSpeed";
    case ErrorCode::NonConvex: return "NonConvex";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Exception carrying a machine-readable code. what() is "<Code>: <detail>".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace obstacle_path
