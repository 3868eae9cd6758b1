#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace zsakns {

enum class ErrorCode {
  InvalidArgument,
  NonOffDiagonalInput,
  RankDeficient,
  PoleAtZero,
  NearPole,
  PoleHit,
  GramSingular,
  InvolutionViolation,
  DegeneratePair,
  MSingular,
  RealnessViolation,
  StepTooLarge,
  NotApplicable,
  UnitarityDrift,
  ShapeMismatch,
  CompatibilityDrift,
  BranchJump,
  GridTooSmall,
  IoError,
  SchemaError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonOffDiagonalInput: return "NonOffDiagonalInput";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::PoleAtZero: return "PoleAtZero";
    case ErrorCode::NearPole: return "NearPole";
    case ErrorCode::PoleHit: return "PoleHit";
    case ErrorCode::GramSingular: return "GramSingular";
    case ErrorCode::InvolutionViolation: return "InvolutionViolation";
    case ErrorCode::DegeneratePair: return "DegeneratePair";
    case ErrorCode::MSingular: return "MSingular";
    case ErrorCode::RealnessViolation: return "RealnessViolation";
    case ErrorCode::StepTooLarge: return "StepTooLarge";
    case ErrorCode::NotApplicable: return "NotApplicable";
    case ErrorCode::UnitarityDrift: return "UnitarityDrift";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::CompatibilityDrift: return "CompatibilityDrift";
    case ErrorCode::BranchJump: return "BranchJump";
    case ErrorCode::GridTooSmall: return "GridTooSmall";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::SchemaError: return "SchemaError";
  }
  return "Unknown";
}

/// Every failure in the library is reported as an Error carrying a code, so
/// callers (tests, the CLI) can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace zsakns
