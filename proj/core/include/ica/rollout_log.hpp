// SPDX-License-Identifier: Apache-2.0

#ifndef ICA_ROLLOUT_LOG_HPP_
#define ICA_ROLLOUT_LOG_HPP_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "ica/trajectory.hpp"

namespace ica {

inline constexpr int kRolloutSchemaVersion = 1;

/// One JSON record per line; no trailing newline.
std::string serialize_trajectory(const Trajectory& t);

/// Parses one record. Throws Error(kMalformedRecord) naming `line_number`
/// and the offending field. Does not validate trajectory invariants.
Trajectory parse_trajectory_record(std::string_view line,
                                   std::size_t line_number);

// Groups by query_id in order of first appearance. Every trajectory is
// validated; the first violation raises Error(kInvariantViolation).
std::vector<RolloutGroup> read_rollout_log(std::istream& in);
std::vector<RolloutGroup> parse_rollout_log(const std::filesystem::path& path);

void write_rollout_log(const std::vector<RolloutGroup>& groups,
                       std::ostream& out);
void write_rollout_log(const std::vector<RolloutGroup>& groups,
                       const std::filesystem::path& path);

}  // namespace ica

#endif  // ICA_ROLLOUT_LOG_HPP_
