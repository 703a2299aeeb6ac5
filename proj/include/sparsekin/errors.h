#pragma once

#include <stdexcept>
#include <string>

namespace sparsekin {

enum class ErrorCode {
  kParse,
  kCycle,
  kNonUnitAxis,
  kDuplicateId,
  kInvalidBounds,
  kUnknownJoint,
  kInvalidConfig,
  kDimensionMismatch,
  kDepthTooSmall,
  kTooFewVisible,
  kCollinearLandmarks,
  kRankDeficient,
  kBudgetExceeded,
  kNoFeasibleSupport,
  kLpFailure,
  kInvalidCounterexample,
  kInvalidArgument,
  kEmptyStream,
  kIo,
};

const char* ErrorCodeName(ErrorCode code);

// All library failures are reported through this type; the code lets callers
// (the CLI in particular) map failures to exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sparsekin
