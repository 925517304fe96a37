#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pllbeam {

enum class ErrorCode {
  InvalidArgument = 1,
  InvalidResidue,
  PositionOutOfRange,
  PositionAlreadyEdited,
  IdentitySubstitution,
  LengthMismatch,
  AlphabetMismatch,
  ProviderUnavailable,
  NotSingleSubstitution,
  EmptyMask,
  EditBudgetExceedsMask,
  ScorerFailure,
  PositionNotInTable,
  InsufficientPeers,
  RetryBudgetExhausted,
  Io,
  Parse,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace pllbeam
