#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace airstar {

enum class ErrorCode : int {
  kOk = 0,
  kInvalidArgument,
  kIoError,
  kSchemaError,
  kConsistencyError,
  kOutOfRegion,
  kNotFound,
  kMissingGrid,
  kStartBlocked,
  kGoalBlocked,
  kNoPath,
  kSmoothingFailed,
  kNoTarget,
  kBackendUnavailable,
  kInvalidDepth,
  kNoHumanVisible,
  kTargetLost,
  kDegenerateGeometry,
  kNoInformativeView,
  kPlanRejected,
  kNoMatch,
  kMissionFailed,
  kDecodeError,
  kIllegalTransition,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; the code carries the failure class
// so callers (and the C API) can dispatch without RTTI on subclasses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace airstar
