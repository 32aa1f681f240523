#pragma once

#include <stdexcept>
#include <string>

namespace moverci {

/// Error taxonomy shared by all modules. Every throw carries a code so callers
/// (batch analysis, the simulation harness, the CLI) can react without parsing
/// message text.
enum class ErrorCode {
  EmptyStrata,
  GroupMissing,
  InvariantViolation,
  MrStrataCount,
  MalformedInterval,
  AllZeroVariances,
  RefitUnavailable,
  ZeroDenominator,
  NonpositiveEstimate,
  NoConvergence,
  DegenerateVariance,
  ZeroPooledRate,
  Incomputable,
  EmptyGroup,
  BeyondFollowUp,
  StrataCount,
  DimensionMismatch,
  ParseError,
  MissingCell,
  RegenerationLimit,
  UnknownExample,
  InvalidArgument,
};

const char* error_code_name(ErrorCode code);

class MoverError : public std::runtime_error {
 public:
  MoverError(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw MoverError(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace moverci
