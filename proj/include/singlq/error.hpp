#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>

namespace singlq {

enum class ErrorCode {
  kNotSymmetric,
  kNotPositiveDefinite,
  kNotPsd,
  kEigenFailure,
  kNoStabilizingSolution,
  kSingularShift,
  kRankDeficient,
  kOverflow,
  kDimensionMismatch,
  kSingularTransform,
  kStructureViolation,
  kStepUnderflow,
  kDivergence,
  kTailNotDecaying,
  kParseError,
  kInvalidArgument,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotSymmetric: return "NotSymmetric";
    case ErrorCode::kNotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::kNotPsd: return "NotPSD";
    case ErrorCode::kEigenFailure: return "EigenFailure";
    case ErrorCode::kNoStabilizingSolution: return "NoStabilizingSolution";
    case ErrorCode::kSingularShift: return "SingularShift";
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kOverflow: return "Overflow";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kSingularTransform: return "SingularTransform";
    case ErrorCode::kStructureViolation: return "StructureViolation";
    case ErrorCode::kStepUnderflow: return "StepUnderflow";
    case ErrorCode::kDivergence: return "Divergence";
    case ErrorCode::kTailNotDecaying: return "TailNotDecaying";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

/// Short decimal form of a double for error messages (%.6g).
inline std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace singlq
