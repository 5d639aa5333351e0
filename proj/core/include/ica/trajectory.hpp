// SPDX-License-Identifier: Apache-2.0

#ifndef ICA_TRAJECTORY_HPP_
#define ICA_TRAJECTORY_HPP_

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace ica {

// Actions. A single SEARCH may batch several query reformulations.
struct SearchAction {
  std::vector<std::string> queries;
  friend bool operator==(const SearchAction&, const SearchAction&) = default;
};

struct FetchAction {
  std::vector<std::string> urls;
  friend bool operator==(const FetchAction&, const FetchAction&) = default;
};

struct AnswerAction {
  std::string text;
  friend bool operator==(const AnswerAction&, const AnswerAction&) = default;
};

using Action = std::variant<SearchAction, FetchAction, AnswerAction>;

struct SearchResultItem {
  std::string url;
  std::string title;
  std::string snippet;
  int rank = 0;  // 1-based
  friend bool operator==(const SearchResultItem&,
                         const SearchResultItem&) = default;
};

enum class ContentKind { kSnapshot, kText };

struct PageRef {
  std::string url;
  std::string content_digest;
  ContentKind content_kind = ContentKind::kSnapshot;
  std::uint64_t token_count = 0;
  friend bool operator==(const PageRef&, const PageRef&) = default;
};

struct SearchResults {
  std::vector<SearchResultItem> items;
  friend bool operator==(const SearchResults&, const SearchResults&) = default;
};

struct FetchedPages {
  std::vector<PageRef> pages;
  friend bool operator==(const FetchedPages&, const FetchedPages&) = default;
};

// Answer turns and failed tool calls.
struct NoObservation {
  friend bool operator==(const NoObservation&, const NoObservation&) = default;
};

using Observation = std::variant<SearchResults, FetchedPages, NoObservation>;

struct Turn {
  int index = 0;  // 1-based
  std::string reasoning_digest;
  Action action;
  Observation observation;
  // Policy-generated tokens only; observation tokens are never counted.
  std::uint64_t generated_token_count = 0;
  friend bool operator==(const Turn&, const Turn&) = default;
};

struct Trajectory {
  std::string trajectory_id;
  std::string query_id;
  std::string query_text;
  std::vector<Turn> turns;
  int outcome = 0;  // R in {0, 1}
  std::uint64_t total_generated_tokens = 0;

  int num_turns() const { return static_cast<int>(turns.size()); }
  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct RolloutGroup {
  std::string query_id;
  std::vector<Trajectory> trajectories;
  friend bool operator==(const RolloutGroup&, const RolloutGroup&) = default;
};

enum class ActionKind { kSearch, kFetch, kAnswer };

ActionKind kind_of(const Action& action);

inline bool is_search(const Turn& turn) {
  return std::holds_alternative<SearchAction>(turn.action);
}
inline bool is_fetch(const Turn& turn) {
  return std::holds_alternative<FetchAction>(turn.action);
}
inline bool is_answer(const Turn& turn) {
  return std::holds_alternative<AnswerAction>(turn.action);
}

struct Violation {
  std::string code;
  std::string detail;
};

using ValidationReport = std::vector<Violation>;

// Violation codes reported by validate_trajectory.
namespace violation {
inline constexpr const char* kIndexGap = "index-gap";
inline constexpr const char* kAnswerNotTerminal = "answer-not-terminal";
inline constexpr const char* kMissingAnswer = "missing-answer";
inline constexpr const char* kEmptyTurns = "empty-turns";
inline constexpr const char* kEmptySearch = "empty-search";
inline constexpr const char* kEmptyFetch = "empty-fetch";
inline constexpr const char* kEmptyAnswer = "empty-answer";
inline constexpr const char* kObservationMismatch = "observation-mismatch";
inline constexpr const char* kRankNotContiguous = "rank-not-contiguous";
inline constexpr const char* kFetchNotFromPreviousResults =
    "fetch-not-from-previous-results";
inline constexpr const char* kTokenSumMismatch = "token-sum-mismatch";
inline constexpr const char* kBadOutcome = "bad-outcome";
}  // namespace violation

/// Lists every violated trajectory invariant; an empty report means the
/// trajectory is well formed.
ValidationReport validate_trajectory(const Trajectory& t);

}  // namespace ica

#endif  // ICA_TRAJECTORY_HPP_
