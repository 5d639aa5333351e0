// SPDX-License-Identifier: Apache-2.0

#include "ica/trajectory.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <string>

namespace ica {

ActionKind kind_of(const Action& action) {
  switch (action.index()) {
    case 0: return ActionKind::kSearch;
    case 1: return ActionKind::kFetch;
    default: return ActionKind::kAnswer;
  }
}

namespace {

void check_action(const Turn& turn, ValidationReport& report) {
  const std::string where = "turn " + std::to_string(turn.index);
  if (const auto* s = std::get_if<SearchAction>(&turn.action)) {
    if (s->queries.empty()) report.push_back({violation::kEmptySearch, where});
  } else if (const auto* f = std::get_if<FetchAction>(&turn.action)) {
    if (f->urls.empty()) report.push_back({violation::kEmptyFetch, where});
  } else if (std::get<AnswerAction>(turn.action).text.empty()) {
    report.push_back({violation::kEmptyAnswer, where});
  }
}

void check_observation(const Turn& turn, ValidationReport& report) {
  const std::string where = "turn " + std::to_string(turn.index);
  if (const auto* results = std::get_if<SearchResults>(&turn.observation)) {
    if (!is_search(turn)) {
      report.push_back({violation::kObservationMismatch,
                        where + ": search results on a non-search action"});
    }
    std::vector<int> ranks;
    ranks.reserve(results->items.size());
    for (const auto& item : results->items) ranks.push_back(item.rank);
    std::sort(ranks.begin(), ranks.end());
    for (std::size_t i = 0; i < ranks.size(); ++i) {
      if (ranks[i] != static_cast<int>(i) + 1) {
        report.push_back({violation::kRankNotContiguous, where});
        break;
      }
    }
  } else if (std::holds_alternative<FetchedPages>(turn.observation)) {
    if (!is_fetch(turn)) {
      report.push_back({violation::kObservationMismatch,
                        where + ": fetched pages on a non-fetch action"});
    }
  }
}

}  // namespace

ValidationReport validate_trajectory(const Trajectory& t) {
  ValidationReport report;
  if (t.outcome != 0 && t.outcome != 1) {
    report.push_back({violation::kBadOutcome, std::to_string(t.outcome)});
  }
  if (t.turns.empty()) {
    report.push_back({violation::kEmptyTurns, t.trajectory_id});
    if (t.total_generated_tokens != 0) {
      report.push_back({violation::kTokenSumMismatch, "no turns"});
    }
    return report;
  }

  for (std::size_t i = 0; i < t.turns.size(); ++i) {
    if (t.turns[i].index != static_cast<int>(i) + 1) {
      report.push_back({violation::kIndexGap,
                        "position " + std::to_string(i + 1) + " has index " +
                            std::to_string(t.turns[i].index)});
      break;
    }
  }

  for (std::size_t i = 0; i + 1 < t.turns.size(); ++i) {
    if (is_answer(t.turns[i])) {
      report.push_back({violation::kAnswerNotTerminal,
                        "turn " + std::to_string(t.turns[i].index)});
    }
  }
  if (!is_answer(t.turns.back())) {
    report.push_back({violation::kMissingAnswer,
                      "final turn " + std::to_string(t.turns.back().index)});
  } else if (!std::holds_alternative<NoObservation>(
                 t.turns.back().observation)) {
    report.push_back({violation::kObservationMismatch,
                      "answer turn carries an observation"});
  }

  for (std::size_t i = 0; i < t.turns.size(); ++i) {
    const Turn& turn = t.turns[i];
    check_action(turn, report);
    check_observation(turn, report);
    const auto* fetch = std::get_if<FetchAction>(&turn.action);
    if (fetch == nullptr || i == 0) continue;
    const auto* prev =
        std::get_if<SearchResults>(&t.turns[i - 1].observation);
    std::set<std::string_view> allowed;
    if (prev != nullptr) {
      for (const auto& item : prev->items) allowed.insert(item.url);
    }
    for (const auto& url : fetch->urls) {
      if (!allowed.contains(url)) {
        report.push_back({violation::kFetchNotFromPreviousResults,
                          "turn " + std::to_string(turn.index) + ": " + url});
      }
    }
  }

  const std::uint64_t sum = std::accumulate(
      t.turns.begin(), t.turns.end(), std::uint64_t{0},
      [](std::uint64_t acc, const Turn& turn) {
        return acc + turn.generated_token_count;
      });
  if (sum != t.total_generated_tokens) {
    report.push_back({violation::kTokenSumMismatch,
                      std::to_string(sum) + " != " +
                          std::to_string(t.total_generated_tokens)});
  }
  return report;
}

}  // namespace ica
