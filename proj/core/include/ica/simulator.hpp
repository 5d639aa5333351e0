// SPDX-License-Identifier: Apache-2.0

#ifndef ICA_SIMULATOR_HPP_
#define ICA_SIMULATOR_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ica/evidence.hpp"
#include "ica/policy.hpp"
#include "ica/trajectory.hpp"

namespace ica {

struct PageSpec {
  std::string url;
  std::string payload_digest;
  std::uint64_t token_cost = 1;
  std::set<std::string> gold_for;  // query ids
  bool is_distractor = false;      // gold for no query
  std::string title;
  std::string snippet;
  friend bool operator==(const PageSpec&, const PageSpec&) = default;
};

struct QuerySpec {
  std::string query_id;
  std::string query_text;
  std::vector<std::string> gold_evidence;  // sorted; bit i of the state mask
  std::map<std::string, std::vector<std::string>> search_pools;  // ranked
  friend bool operator==(const QuerySpec&, const QuerySpec&) = default;
};

struct WorldSpec {
  std::vector<PageSpec> pages;
  std::vector<QuerySpec> queries;
  int results_per_search = 5;
  int max_turns = 10;
  std::uint64_t seed = 0;

  const PageSpec& page(const std::string& url) const;
  const QuerySpec& query(const std::string& query_id) const;
  friend bool operator==(const WorldSpec&, const WorldSpec&) = default;
};

struct WorldParams {
  int n_pages = 20;
  int n_gold_per_query = 2;
  int n_queries = 5;
  double distractor_ratio = 4.0;
  std::uint64_t seed = 7;
  int results_per_search = 5;
  int max_turns = 12;
};

/// Throws Error(kInfeasibleSpec) when the pages cannot host disjoint gold
/// sets plus the requested distractors.
WorldSpec generate_world(const WorldParams& params);

/// 20 pages, 2 gold per query, 5 queries, distractor ratio 4.
WorldSpec reference_world(std::uint64_t seed = 7);

/// Throws Error(kInvariantViolation) naming the first broken invariant.
void validate_world(const WorldSpec& world);

std::string serialize_world(const WorldSpec& world);
WorldSpec parse_world(const std::string& text);
WorldSpec load_world(const std::filesystem::path& path);
void save_world(const WorldSpec& world, const std::filesystem::path& path);

// Policy-facing encoding. States are "<query>|m<mask>|<last>" where mask is
// the bitmask of gold pages fetched so far and last is "start", "fetch" or
// "search:<pool>". Actions are "search:<pool>", "fetch:<rank>", "answer".
std::string state_key(const std::string& query_id, unsigned mask,
                      const std::string& last);

struct Episode {
  Trajectory trajectory;
  std::vector<Decision> decisions;  // one per turn
};

/// Reason, act, observe until ANSWER; the final turn at max_turns is a
/// forced ANSWER. R = 1 iff every gold page was fetched. Throws
/// Error(kUnknownQuery).
Episode run_episode_traced(const WorldSpec& world, const std::string& query_id,
                           const Policy& policy, std::uint64_t seed);
Trajectory run_episode(const WorldSpec& world, const std::string& query_id,
                       const Policy& policy, std::uint64_t seed);

struct TracedGroup {
  RolloutGroup group;
  std::vector<std::vector<Decision>> decisions;
};

/// G episodes with seeds seed+1 .. seed+G. Requires G >= 2.
TracedGroup rollout_group_traced(const WorldSpec& world,
                                 const std::string& query_id,
                                 const Policy& policy, int group_size,
                                 std::uint64_t seed);
RolloutGroup rollout_group(const WorldSpec& world, const std::string& query_id,
                           const Policy& policy, int group_size,
                           std::uint64_t seed);

/// Brute-force Delta_e: walks every trajectory, tallies the four
/// acquired/success counts per unit from the per-turn map, applies the
/// batch-rate fallback.
std::map<std::string, double> oracle_delta(const RolloutGroup& group,
                                           const AcquisitionIndex& index);

// Plays a fixed action list per query; "answer" once the list runs out.
class ScriptedPolicy : public Policy {
 public:
  explicit ScriptedPolicy(std::map<std::string, std::vector<std::string>> script)
      : script_(std::move(script)) {}

  static ScriptedPolicy from_json(const std::string& text);

  std::string choose(const Decision& context, Rng& rng) const override;

 private:
  std::map<std::string, std::vector<std::string>> script_;
};

/// Script that searches, fetches each gold page and answers.
std::map<std::string, std::vector<std::string>> gold_script(
    const WorldSpec& world);

}  // namespace ica

#endif  // ICA_SIMULATOR_HPP_
