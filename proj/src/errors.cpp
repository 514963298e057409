#include "scenesim/errors.hpp"

namespace scenesim {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kValidation: return "ValidationError";
    case ErrorCode::kNoLaneFound: return "NoLaneFound";
    case ErrorCode::kUnreachableGoal: return "UnreachableGoal";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kNoGroundFound: return "NoGroundFound";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kOffRoute: return "OffRoute";
    case ErrorCode::kPlannerDisconnect: return "PlannerDisconnect";
    case ErrorCode::kProtocol: return "ProtocolError";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kIo: return "IoError";
  }
  return "Unknown";
}

}  // namespace scenesim
