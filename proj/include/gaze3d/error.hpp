#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gaze3d {

enum class ErrorCode {
  NonPositiveDepth,
  AngleOutOfRange,
  ZeroVector,
  ParallelToPlane,
  BehindOrigin,
  InvalidCamera,
  NoIntersection,
  DegenerateTarget,
  TargetNotVisible,
  PupilNotVisible,
  NonFiniteResidual,
  SingularNormalEquations,
  RankDeficient,
  DegenerateGeometry,
  InsufficientData,
  MissingField,
  ParseError,
  SchemaVersionMismatch,
  UnitViolation,
  EmptyCalibration,
  ConfigError,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::AngleOutOfRange: return "AngleOutOfRange";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::ParallelToPlane: return "ParallelToPlane";
    case ErrorCode::BehindOrigin: return "BehindOrigin";
    case ErrorCode::InvalidCamera: return "InvalidCamera";
    case ErrorCode::NoIntersection: return "NoIntersection";
    case ErrorCode::DegenerateTarget: return "DegenerateTarget";
    case ErrorCode::TargetNotVisible: return "TargetNotVisible";
    case ErrorCode::PupilNotVisible: return "PupilNotVisible";
    case ErrorCode::NonFiniteResidual: return "NonFiniteResidual";
    case ErrorCode::SingularNormalEquations: return "SingularNormalEquations";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorCode::UnitViolation: return "UnitViolation";
    case ErrorCode::EmptyCalibration: return "EmptyCalibration";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Exception type thrown by every module. `code()` is stable and
/// machine-readable; `what()` carries the human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gaze3d
