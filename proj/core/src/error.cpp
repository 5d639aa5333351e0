// SPDX-License-Identifier: Apache-2.0

#include "ica/error.hpp"

namespace ica {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedRecord: return "MALFORMED_RECORD";
    case ErrorCode::kInvariantViolation: return "INVARIANT_VIOLATION";
    case ErrorCode::kIoError: return "IO_ERROR";
    case ErrorCode::kMalformedUrl: return "MALFORMED_URL";
    case ErrorCode::kNoneObservation: return "NONE_OBSERVATION";
    case ErrorCode::kUnknownTrajectory: return "UNKNOWN_TRAJECTORY";
    case ErrorCode::kDuplicateTrajectory: return "DUPLICATE_TRAJECTORY";
    case ErrorCode::kEmptyGroup: return "EMPTY_GROUP";
    case ErrorCode::kUnknownEvidence: return "UNKNOWN_EVIDENCE";
    case ErrorCode::kMissingContribution: return "MISSING_CONTRIBUTION";
    case ErrorCode::kBadTurnIndex: return "BAD_TURN_INDEX";
    case ErrorCode::kGroupTooSmall: return "GROUP_TOO_SMALL";
    case ErrorCode::kMissingTurn: return "MISSING_TURN";
    case ErrorCode::kNonpositiveRatio: return "NONPOSITIVE_RATIO";
    case ErrorCode::kEmptyBatch: return "EMPTY_BATCH";
    case ErrorCode::kShapeMismatch: return "SHAPE_MISMATCH";
    case ErrorCode::kInfeasibleSpec: return "INFEASIBLE_SPEC";
    case ErrorCode::kUnknownQuery: return "UNKNOWN_QUERY";
    case ErrorCode::kPreconditionFailed: return "PRECONDITION_FAILED";
    case ErrorCode::kBadGeometry: return "BAD_GEOMETRY";
    case ErrorCode::kScoreLengthMismatch: return "SCORE_LENGTH_MISMATCH";
    case ErrorCode::kEmptyInput: return "EMPTY_INPUT";
    case ErrorCode::kNonpositiveTextCost: return "NONPOSITIVE_TEXT_COST";
  }
  return "UNKNOWN";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code) {}

}  // namespace ica
