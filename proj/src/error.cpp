#include "airstar/error.hpp"

namespace airstar {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kOk: return "Ok";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kSchemaError: return "SchemaError";
    case ErrorCode::kConsistencyError: return "ConsistencyError";
    case ErrorCode::kOutOfRegion: return "OutOfRegion";
    case ErrorCode::kNotFound: return "NotFound";
    case ErrorCode::kMissingGrid: return "MissingGrid";
    case ErrorCode::kStartBlocked: return "StartBlocked";
    case ErrorCode::kGoalBlocked: return "GoalBlocked";
    case ErrorCode::kNoPath: return "NoPath";
    case ErrorCode::kSmoothingFailed: return "SmoothingFailed";
    case ErrorCode::kNoTarget: return "NoTarget";
    case ErrorCode::kBackendUnavailable: return "BackendUnavailable";
    case ErrorCode::kInvalidDepth: return "InvalidDepth";
    case ErrorCode::kNoHumanVisible: return "NoHumanVisible";
    case ErrorCode::kTargetLost: return "TargetLost";
    case ErrorCode::kDegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::kNoInformativeView: return "NoInformativeView";
    case ErrorCode::kPlanRejected: return "PlanRejected";
    case ErrorCode::kNoMatch: return "NoMatch";
    case ErrorCode::kMissionFailed: return "MissionFailed";
    case ErrorCode::kDecodeError: return "DecodeError";
    case ErrorCode::kIllegalTransition: return "IllegalTransition";
  }
  return "Unknown";
}

}  // namespace airstar
