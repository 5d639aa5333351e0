// SPDX-License-Identifier: Apache-2.0

#ifndef ICA_CREDIT_HPP_
#define ICA_CREDIT_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ica/evidence.hpp"
#include "ica/stats.hpp"
#include "ica/trajectory.hpp"

namespace ica {

struct CreditConfig {
  double omega = 0.95;         // fetch-turn temporal decay, in (0, 1]
  double lambda_weight = 1.0;  // weight of the information-aware advantage
  double epsilon = 1e-6;       // normalizer guard
  // true: tool statistics over decayed credit; false: over raw credit.
  bool normalize_decayed = true;

  void validate() const;
};

enum class ToolKind { kSearch, kFetch };

std::string_view to_string(ToolKind kind);

enum class FallbackUsed { kNone, kPosBranch, kNegBranch, kBoth };

std::string_view to_string(FallbackUsed f);

struct EvidenceContribution {
  std::string evidence_id;
  double p_success_given_acquired = 0.0;
  double p_success_given_not = 0.0;
  double delta = 0.0;
  FallbackUsed fallback_used = FallbackUsed::kNone;
};

struct TurnCredit {
  std::string trajectory_id;
  int turn_index = 0;
  ToolKind tool_kind = ToolKind::kSearch;
  double raw_credit = 0.0;
  double decayed_credit = 0.0;
  double normalized_advantage = 0.0;
};

struct ToolStatistics {
  PopulationStats search;
  PopulationStats fetch;

  const PopulationStats& operator[](ToolKind k) const {
    return k == ToolKind::kSearch ? search : fetch;
  }
};

/// One row per turn of every trajectory. Tool turns carry credits; the
/// terminal Answer turn has no tool and its normalized advantage is A_n.
struct TurnAdvantage {
  std::string trajectory_id;
  int turn_index = 0;
  std::optional<ToolKind> tool_kind;
  double raw_credit = 0.0;
  double decayed_credit = 0.0;
  double normalized_advantage = 0.0;
  double task_advantage = 0.0;
  double mixed_advantage = 0.0;
  std::uint64_t token_count = 0;
};

struct AdvantageTable {
  std::string query_id;
  CreditConfig config;
  double mu_r = 0.0;
  double sigma_r = 0.0;
  ToolStatistics tool_stats;
  std::vector<EvidenceContribution> contributions;  // by evidence_id
  // Trajectory order matches the group; A_n per trajectory.
  std::vector<std::pair<std::string, double>> task_advantage;
  std::vector<TurnAdvantage> turns;  // group order, then turn order

  const TurnAdvantage* find(const std::string& trajectory_id,
                            int turn_index) const;
  double task_advantage_of(const std::string& trajectory_id) const;
};

/// (1/N) sum R. Throws Error(kEmptyGroup).
double batch_success_rate(const RolloutGroup& group);

/// Conditional success estimates for one evidence unit, with the batch rate
/// substituted for any branch whose denominator is zero.
EvidenceContribution conditional_success(const std::string& evidence_id,
                                         const AcquisitionIndex& index,
                                         const RolloutGroup& group);

std::map<std::string, double> contribution_deltas(
    const AcquisitionIndex& index, const RolloutGroup& group);

/// Mean of Delta over the turn's evidence; 0 for an empty set.
double turn_raw_credit(const std::map<std::string, double>& deltas,
                       const std::set<std::string>& turn_set);

/// Fetch credit is scaled by omega^(T_n - t - 1); search credit passes
/// through. Requires 1 <= t < T_n.
double apply_decay(double raw, ToolKind tool, int t, int num_turns,
                   const CreditConfig& cfg);

ToolStatistics tool_statistics(const std::vector<TurnCredit>& credits,
                               const CreditConfig& cfg);

std::vector<TurnCredit> normalize_tool_groups(std::vector<TurnCredit> credits,
                                              const CreditConfig& cfg);

/// Batch-normalized outcome A_n for each trajectory, in group order.
std::vector<std::pair<std::string, double>> terminal_advantage(
    const RolloutGroup& group, const CreditConfig& cfg);

AdvantageTable compute_advantage_table(const RolloutGroup& group,
                                       const AcquisitionIndex& index,
                                       const CreditConfig& cfg);

struct TokenAdvantage {
  std::uint64_t token_count = 0;
  double advantage = 0.0;
  friend bool operator==(const TokenAdvantage&, const TokenAdvantage&) = default;
};

/// Every generated token of a turn receives that turn's mixed advantage.
std::map<TurnKey, TokenAdvantage> broadcast_to_tokens(
    const AdvantageTable& table, const RolloutGroup& group);

}  // namespace ica

#endif  // ICA_CREDIT_HPP_
