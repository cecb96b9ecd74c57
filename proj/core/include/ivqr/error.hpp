#pragma once

#include <stdexcept>
#include <string>

namespace ivqr {

enum class ErrorCode {
  kNotPositiveDefinite,
  kDimensionMismatch,
  kRankDeficient,
  kSingularInstruments,
  kDegenerateVariance,
  kDegenerateDesign,
  kInvalidArgument,
  kMissingColumn,
  kNonNumericCell,
  kEmptyFile,
  kIo,
  kInconsistentDimensions,
  kNoFeasibleSolution,
  kTooLarge,
};

const char* ToString(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(ToString(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ivqr
