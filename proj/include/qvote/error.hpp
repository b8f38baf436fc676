#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qvote {

enum class ErrorCode {
  InvalidArgument,
  InvalidQubitCount,
  InvalidBasisIndex,
  InvalidTarget,
  DimensionMismatch,
  EmptyBallot,
  ConfigMismatch,
  NoBallots,
  InvalidLength,
  KeyTooShort,
  InvalidId,
  DuplicateVoter,
  InvalidLedger,
  AmbiguousTarget,
  NotEligible,
  AlreadyRegistered,
  ProtocolOrderViolation,
  UnknownVoter,
  TallyBlocked,
  ParseError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidQubitCount: return "InvalidQubitCount";
    case ErrorCode::InvalidBasisIndex: return "InvalidBasisIndex";
    case ErrorCode::InvalidTarget: return "InvalidTarget";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyBallot: return "EmptyBallot";
    case ErrorCode::ConfigMismatch: return "ConfigMismatch";
    case ErrorCode::NoBallots: return "NoBallots";
    case ErrorCode::InvalidLength: return "InvalidLength";
    case ErrorCode::KeyTooShort: return "KeyTooShort";
    case ErrorCode::InvalidId: return "InvalidId";
    case ErrorCode::DuplicateVoter: return "DuplicateVoter";
    case ErrorCode::InvalidLedger: return "InvalidLedger";
    case ErrorCode::AmbiguousTarget: return "AmbiguousTarget";
    case ErrorCode::NotEligible: return "NotEligible";
    case ErrorCode::AlreadyRegistered: return "AlreadyRegistered";
    case ErrorCode::ProtocolOrderViolation: return "ProtocolOrderViolation";
    case ErrorCode::UnknownVoter: return "UnknownVoter";
    case ErrorCode::TallyBlocked: return "TallyBlocked";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// The single exception type thrown by the library. `code()` identifies the
/// failure class; `what()` carries a human-readable diagnostic.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace qvote
