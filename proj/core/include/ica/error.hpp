// SPDX-License-Identifier: Apache-2.0

#ifndef ICA_ERROR_HPP_
#define ICA_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace ica {

enum class ErrorCode {
  kMalformedRecord,
  kInvariantViolation,
  kIoError,
  kMalformedUrl,
  kNoneObservation,
  kUnknownTrajectory,
  kDuplicateTrajectory,
  kEmptyGroup,
  kUnknownEvidence,
  kMissingContribution,
  kBadTurnIndex,
  kGroupTooSmall,
  kMissingTurn,
  kNonpositiveRatio,
  kEmptyBatch,
  kShapeMismatch,
  kInfeasibleSpec,
  kUnknownQuery,
  kPreconditionFailed,
  kBadGeometry,
  kScoreLengthMismatch,
  kEmptyInput,
  kNonpositiveTextCost,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as this exception; `code()` identifies the
// contract error named in the module interface.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ica

#endif  // ICA_ERROR_HPP_
