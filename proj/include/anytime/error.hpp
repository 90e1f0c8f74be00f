#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace anytime {

enum class ErrorKind {
  NotPositiveDefinite,
  DimensionMismatch,
  SingularSchurComplement,
  NoConvergence,
  ParseError,
  SpecError,
  RankDeficientGroup,
  InvalidConfig,
  InvalidInput,
  SingularSystem,
  NonpositiveCost,
  EmptyCurve,
  InvalidStopCost,
  ColumnMismatch,
  LengthMismatch,
  EmptyQuery,
  TooManyGroups,
  IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Every failure raised by the library carries a kind so callers (the CLI in
// particular) can map it onto an exit code without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::SingularSchurComplement: return "SingularSchurComplement";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::SpecError: return "SpecError";
    case ErrorKind::RankDeficientGroup: return "RankDeficientGroup";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::NonpositiveCost: return "NonpositiveCost";
    case ErrorKind::EmptyCurve: return "EmptyCurve";
    case ErrorKind::InvalidStopCost: return "InvalidStopCost";
    case ErrorKind::ColumnMismatch: return "ColumnMismatch";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::EmptyQuery: return "EmptyQuery";
    case ErrorKind::TooManyGroups: return "TooManyGroups";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace anytime
