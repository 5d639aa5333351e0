// SPDX-License-Identifier: Apache-2.0

#ifndef ICA_EVIDENCE_HPP_
#define ICA_EVIDENCE_HPP_

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ica/trajectory.hpp"

namespace ica {

/// Lowercases scheme and host, drops the fragment and tracking parameters
/// (utm_*, fbclid, gclid), sorts the remaining query parameters by key and
/// maps an empty path to "/". Throws Error(kMalformedUrl).
std::string canonicalize_url(std::string_view raw);

enum class EvidenceKind { kSearchItem, kPageSnapshot };

std::string_view to_string(EvidenceKind kind);

struct EvidenceUnit {
  std::string evidence_id;
  EvidenceKind kind = EvidenceKind::kSearchItem;
  std::string canonical_url;
  std::string content_digest;
  friend bool operator==(const EvidenceUnit&, const EvidenceUnit&) = default;
};

/// Identity of an evidence unit: a digest over (kind, canonical url, content
/// digest). Search items use the digest of title and snippet as content.
EvidenceUnit make_search_item_unit(const SearchResultItem& item);
EvidenceUnit make_page_unit(const PageRef& page);

using TurnKey = std::pair<std::string, int>;  // (trajectory_id, turn_index)

// Bidirectional map between evidence units and the turns that acquired them.
// Both directions are kept exact inverses of each other.
class AcquisitionIndex {
 public:
  /// Registers every unit carried by `obs` at (trajectory_id, turn_index)
  /// and returns their ids in observation order. Throws
  /// Error(kNoneObservation) for NoObservation.
  std::vector<std::string> register_observation(const std::string& trajectory_id,
                                                int turn_index,
                                                const Observation& obs);

  // Records that the trajectory has `num_turns` turns so that evidence-free
  // turns still show up in turn_evidence_sets.
  void declare_trajectory(const std::string& trajectory_id, int num_turns);

  /// Per-turn evidence sets of one trajectory; turns without evidence map to
  /// the empty set. Throws Error(kUnknownTrajectory).
  std::map<int, std::set<std::string>> turn_evidence_sets(
      const std::string& trajectory_id) const;

  /// E^(n): union over turns.
  std::set<std::string> acquired_by(const std::string& trajectory_id) const;

  /// Trajectories with I_e = 1.
  std::set<std::string> acquirers(const std::string& evidence_id) const;

  bool contains(const std::string& evidence_id) const {
    return by_evidence_.contains(evidence_id);
  }
  const EvidenceUnit& unit(const std::string& evidence_id) const;

  const std::map<std::string, std::set<TurnKey>>& by_evidence() const {
    return by_evidence_;
  }
  const std::map<TurnKey, std::set<std::string>>& by_turn() const {
    return by_turn_;
  }
  const std::map<std::string, EvidenceUnit>& units() const { return units_; }
  bool empty() const { return by_evidence_.empty() && turn_counts_.empty(); }

  friend bool operator==(const AcquisitionIndex&,
                         const AcquisitionIndex&) = default;

 private:
  void add(const EvidenceUnit& unit, const TurnKey& key);

  std::map<std::string, std::set<TurnKey>> by_evidence_;
  std::map<TurnKey, std::set<std::string>> by_turn_;
  std::map<std::string, EvidenceUnit> units_;
  std::map<std::string, int> turn_counts_;
};

/// Indexes every tool turn of every trajectory in the group. Turns with no
/// observation (answers, failed calls) are present with empty evidence sets.
AcquisitionIndex build_index(const RolloutGroup& group);

struct EvidenceSummary {
  EvidenceUnit unit;
  int n_trajectories = 0;
  int n_success = 0;
  int n_failure = 0;
};

/// Per-unit acquisition counts over a group, ordered by evidence_id.
std::vector<EvidenceSummary> summarize_evidence(const RolloutGroup& group,
                                                const AcquisitionIndex& index);

}  // namespace ica

#endif  // ICA_EVIDENCE_HPP_
