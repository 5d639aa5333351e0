// SPDX-License-Identifier: Apache-2.0

#include "ica/credit.hpp"

#include <cmath>

#include "ica/error.hpp"

namespace ica {

void CreditConfig::validate() const {
  if (!(omega > 0.0 && omega <= 1.0)) {
    throw Error(ErrorCode::kPreconditionFailed, "omega must be in (0, 1]");
  }
  if (!(lambda_weight >= 0.0)) {
    throw Error(ErrorCode::kPreconditionFailed, "lambda must be >= 0");
  }
  if (!(epsilon > 0.0)) {
    throw Error(ErrorCode::kPreconditionFailed, "epsilon must be > 0");
  }
}

std::string_view to_string(ToolKind kind) {
  return kind == ToolKind::kSearch ? "search" : "fetch";
}

std::string_view to_string(FallbackUsed f) {
  switch (f) {
    case FallbackUsed::kNone: return "none";
    case FallbackUsed::kPosBranch: return "pos_branch";
    case FallbackUsed::kNegBranch: return "neg_branch";
    case FallbackUsed::kBoth: return "both";
  }
  return "none";
}

const TurnAdvantage* AdvantageTable::find(const std::string& trajectory_id,
                                          int turn_index) const {
  for (const auto& row : turns) {
    if (row.turn_index == turn_index && row.trajectory_id == trajectory_id) {
      return &row;
    }
  }
  return nullptr;
}

double AdvantageTable::task_advantage_of(
    const std::string& trajectory_id) const {
  for (const auto& [id, a] : task_advantage) {
    if (id == trajectory_id) return a;
  }
  throw Error(ErrorCode::kUnknownTrajectory, trajectory_id);
}

double batch_success_rate(const RolloutGroup& group) {
  if (group.trajectories.empty()) {
    throw Error(ErrorCode::kEmptyGroup, group.query_id);
  }
  long successes = 0;
  for (const auto& t : group.trajectories) successes += t.outcome;
  return static_cast<double>(successes) /
         static_cast<double>(group.trajectories.size());
}

EvidenceContribution conditional_success(const std::string& evidence_id,
                                         const AcquisitionIndex& index,
                                         const RolloutGroup& group) {
  const std::set<std::string> acquirers = index.acquirers(evidence_id);
  const double batch_rate = batch_success_rate(group);

  long acquired = 0, acquired_success = 0;
  long missed = 0, missed_success = 0;
  for (const auto& t : group.trajectories) {
    if (acquirers.contains(t.trajectory_id)) {
      ++acquired;
      acquired_success += t.outcome;
    } else {
      ++missed;
      missed_success += t.outcome;
    }
  }

  EvidenceContribution c;
  c.evidence_id = evidence_id;
  const bool pos_fallback = acquired == 0;
  const bool neg_fallback = missed == 0;
  c.p_success_given_acquired =
      pos_fallback ? batch_rate
                   : static_cast<double>(acquired_success) /
                         static_cast<double>(acquired);
  c.p_success_given_not = neg_fallback ? batch_rate
                                       : static_cast<double>(missed_success) /
                                             static_cast<double>(missed);
  c.delta = c.p_success_given_acquired - c.p_success_given_not;
  if (pos_fallback && neg_fallback) {
    c.fallback_used = FallbackUsed::kBoth;
  } else if (pos_fallback) {
    c.fallback_used = FallbackUsed::kPosBranch;
  } else if (neg_fallback) {
    c.fallback_used = FallbackUsed::kNegBranch;
  }
  return c;
}

std::map<std::string, double> contribution_deltas(
    const AcquisitionIndex& index, const RolloutGroup& group) {
  std::map<std::string, double> out;
  for (const auto& [id, _] : index.by_evidence()) {
    out.emplace(id, conditional_success(id, index, group).delta);
  }
  return out;
}

double turn_raw_credit(const std::map<std::string, double>& deltas,
                       const std::set<std::string>& turn_set) {
  if (turn_set.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& id : turn_set) {
    const auto it = deltas.find(id);
    if (it == deltas.end()) throw Error(ErrorCode::kMissingContribution, id);
    sum += it->second;
  }
  return sum / static_cast<double>(turn_set.size());
}

double apply_decay(double raw, ToolKind tool, int t, int num_turns,
                   const CreditConfig& cfg) {
  if (t < 1 || t >= num_turns) {
    throw Error(ErrorCode::kBadTurnIndex,
                "t=" + std::to_string(t) + " T=" + std::to_string(num_turns));
  }
  if (tool == ToolKind::kSearch) return raw;
  return raw * std::pow(cfg.omega, num_turns - t - 1);
}

ToolStatistics tool_statistics(const std::vector<TurnCredit>& credits,
                               const CreditConfig& cfg) {
  std::vector<double> search, fetch;
  for (const auto& c : credits) {
    const double v = cfg.normalize_decayed ? c.decayed_credit : c.raw_credit;
    (c.tool_kind == ToolKind::kSearch ? search : fetch).push_back(v);
  }
  return ToolStatistics{population_stats(search), population_stats(fetch)};
}

std::vector<TurnCredit> normalize_tool_groups(std::vector<TurnCredit> credits,
                                              const CreditConfig& cfg) {
  const ToolStatistics stats = tool_statistics(credits, cfg);
  for (auto& c : credits) {
    const PopulationStats& s = stats[c.tool_kind];
    const double v = cfg.normalize_decayed ? c.decayed_credit : c.raw_credit;
    c.normalized_advantage = (v - s.mean) / (s.stddev + cfg.epsilon);
  }
  return credits;
}

std::vector<std::pair<std::string, double>> terminal_advantage(
    const RolloutGroup& group, const CreditConfig& cfg) {
  if (group.trajectories.size() < 2) {
    throw Error(ErrorCode::kGroupTooSmall,
                group.query_id + " has " +
                    std::to_string(group.trajectories.size()) +
                    " trajectories");
  }
  std::vector<double> outcomes;
  for (const auto& t : group.trajectories) outcomes.push_back(t.outcome);
  const PopulationStats s = population_stats(outcomes);
  std::vector<std::pair<std::string, double>> out;
  for (const auto& t : group.trajectories) {
    out.emplace_back(t.trajectory_id,
                     (t.outcome - s.mean) / (s.stddev + cfg.epsilon));
  }
  return out;
}

AdvantageTable compute_advantage_table(const RolloutGroup& group,
                                       const AcquisitionIndex& index,
                                       const CreditConfig& cfg) {
  cfg.validate();
  AdvantageTable table;
  table.query_id = group.query_id;
  table.config = cfg;
  table.task_advantage = terminal_advantage(group, cfg);

  std::map<std::string, double> deltas;
  for (const auto& [id, _] : index.by_evidence()) {
    EvidenceContribution c = conditional_success(id, index, group);
    deltas.emplace(id, c.delta);
    table.contributions.push_back(std::move(c));
  }

  std::vector<TurnCredit> credits;
  for (const auto& t : group.trajectories) {
    const auto sets = index.turn_evidence_sets(t.trajectory_id);
    for (const auto& turn : t.turns) {
      if (is_answer(turn)) continue;
      TurnCredit c;
      c.trajectory_id = t.trajectory_id;
      c.turn_index = turn.index;
      c.tool_kind = is_search(turn) ? ToolKind::kSearch : ToolKind::kFetch;
      const auto it = sets.find(turn.index);
      c.raw_credit = it == sets.end() ? 0.0 : turn_raw_credit(deltas, it->second);
      c.decayed_credit = apply_decay(c.raw_credit, c.tool_kind, turn.index,
                                     t.num_turns(), cfg);
      credits.push_back(std::move(c));
    }
  }
  table.tool_stats = tool_statistics(credits, cfg);
  credits = normalize_tool_groups(std::move(credits), cfg);

  std::vector<double> outcomes;
  for (const auto& t : group.trajectories) outcomes.push_back(t.outcome);
  const PopulationStats rs = population_stats(outcomes);
  table.mu_r = rs.mean;
  table.sigma_r = rs.stddev;

  std::size_t next_credit = 0;
  for (std::size_t n = 0; n < group.trajectories.size(); ++n) {
    const Trajectory& t = group.trajectories[n];
    const double a_n = table.task_advantage[n].second;
    for (const auto& turn : t.turns) {
      TurnAdvantage row;
      row.trajectory_id = t.trajectory_id;
      row.turn_index = turn.index;
      row.task_advantage = a_n;
      row.token_count = turn.generated_token_count;
      if (is_answer(turn)) {
        row.normalized_advantage = a_n;
      } else {
        const TurnCredit& c = credits[next_credit++];
        row.tool_kind = c.tool_kind;
        row.raw_credit = c.raw_credit;
        row.decayed_credit = c.decayed_credit;
        row.normalized_advantage = c.normalized_advantage;
      }
      row.mixed_advantage = a_n + cfg.lambda_weight * row.normalized_advantage;
      table.turns.push_back(std::move(row));
    }
  }
  return table;
}

std::map<TurnKey, TokenAdvantage> broadcast_to_tokens(
    const AdvantageTable& table, const RolloutGroup& group) {
  std::map<TurnKey, const TurnAdvantage*> rows;
  for (const auto& row : table.turns) {
    rows.emplace(TurnKey{row.trajectory_id, row.turn_index}, &row);
  }
  std::map<TurnKey, TokenAdvantage> out;
  for (const auto& t : group.trajectories) {
    for (const auto& turn : t.turns) {
      const TurnKey key{t.trajectory_id, turn.index};
      const auto it = rows.find(key);
      if (it == rows.end()) {
        throw Error(ErrorCode::kMissingTurn,
                    t.trajectory_id + " turn " + std::to_string(turn.index));
      }
      out.emplace(key, TokenAdvantage{turn.generated_token_count,
                                      it->second->mixed_advantage});
    }
  }
  return out;
}

}  // namespace ica
