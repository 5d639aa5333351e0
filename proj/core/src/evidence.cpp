// SPDX-License-Identifier: Apache-2.0

#include "ica/evidence.hpp"

#include <algorithm>
#include <cctype>

#include "ica/digest.hpp"
#include "ica/error.hpp"

namespace ica {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

bool is_tracking_param(std::string_view key) {
  return key.starts_with("utm_") || key == "fbclid" || key == "gclid";
}

[[noreturn]] void malformed(std::string_view raw) {
  throw Error(ErrorCode::kMalformedUrl, std::string(raw));
}

}  // namespace

std::string canonicalize_url(std::string_view raw) {
  if (raw.empty()) malformed(raw);
  for (unsigned char c : raw) {
    if (std::isspace(c) || std::iscntrl(c)) malformed(raw);
  }
  const auto sep = raw.find("://");
  if (sep == std::string_view::npos || sep == 0) malformed(raw);
  const std::string_view scheme = raw.substr(0, sep);
  if (!std::isalpha(static_cast<unsigned char>(scheme.front()))) malformed(raw);
  for (unsigned char c : scheme) {
    if (!std::isalnum(c) && c != '+' && c != '-' && c != '.') malformed(raw);
  }

  std::string_view rest = raw.substr(sep + 3);
  if (const auto hash = rest.find('#'); hash != std::string_view::npos) {
    rest = rest.substr(0, hash);
  }
  std::string_view query;
  if (const auto q = rest.find('?'); q != std::string_view::npos) {
    query = rest.substr(q + 1);
    rest = rest.substr(0, q);
  }
  const auto slash = rest.find('/');
  const std::string_view authority = rest.substr(0, slash);
  const std::string_view path =
      slash == std::string_view::npos ? std::string_view{} : rest.substr(slash);

  // Only the host part is case-insensitive; userinfo keeps its case.
  const auto at = authority.rfind('@');
  const std::string_view userinfo =
      at == std::string_view::npos ? std::string_view{}
                                   : authority.substr(0, at + 1);
  const std::string_view hostport =
      at == std::string_view::npos ? authority : authority.substr(at + 1);
  if (hostport.empty() || hostport.front() == ':') malformed(raw);

  std::vector<std::pair<std::string_view, std::string_view>> params;
  std::size_t pos = 0;
  while (pos <= query.size() && !query.empty()) {
    const auto amp = query.find('&', pos);
    const std::string_view part = query.substr(
        pos, amp == std::string_view::npos ? std::string_view::npos
                                           : amp - pos);
    if (!part.empty()) {
      const std::string_view key = part.substr(0, part.find('='));
      if (!is_tracking_param(key)) params.emplace_back(key, part);
    }
    if (amp == std::string_view::npos) break;
    pos = amp + 1;
  }
  std::stable_sort(params.begin(), params.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  std::string out = lower(scheme);
  out += "://";
  out += userinfo;
  out += lower(hostport);
  out += path.empty() ? std::string_view("/") : path;
  for (std::size_t i = 0; i < params.size(); ++i) {
    out += i == 0 ? '?' : '&';
    out += params[i].second;
  }
  return out;
}

std::string_view to_string(EvidenceKind kind) {
  return kind == EvidenceKind::kSearchItem ? "search_item" : "page_snapshot";
}

namespace {

EvidenceUnit make_unit(EvidenceKind kind, std::string canonical_url,
                       std::string content_digest) {
  std::string key(to_string(kind));
  key += '\n';
  key += canonical_url;
  key += '\n';
  key += content_digest;
  return EvidenceUnit{sha256_hex(key), kind, std::move(canonical_url),
                      std::move(content_digest)};
}

}  // namespace

EvidenceUnit make_search_item_unit(const SearchResultItem& item) {
  // Unit separator keeps ("ab", "c") and ("a", "bc") distinct.
  return make_unit(EvidenceKind::kSearchItem, canonicalize_url(item.url),
                   sha256_hex(item.title + '\x1f' + item.snippet));
}

EvidenceUnit make_page_unit(const PageRef& page) {
  return make_unit(EvidenceKind::kPageSnapshot, canonicalize_url(page.url),
                   page.content_digest);
}

void AcquisitionIndex::add(const EvidenceUnit& unit, const TurnKey& key) {
  units_.try_emplace(unit.evidence_id, unit);
  by_evidence_[unit.evidence_id].insert(key);
  by_turn_[key].insert(unit.evidence_id);
}

std::vector<std::string> AcquisitionIndex::register_observation(
    const std::string& trajectory_id, int turn_index, const Observation& obs) {
  const TurnKey key{trajectory_id, turn_index};
  std::vector<std::string> ids;
  if (const auto* results = std::get_if<SearchResults>(&obs)) {
    for (const auto& item : results->items) {
      EvidenceUnit unit = make_search_item_unit(item);
      ids.push_back(unit.evidence_id);
      add(unit, key);
    }
  } else if (const auto* pages = std::get_if<FetchedPages>(&obs)) {
    for (const auto& page : pages->pages) {
      EvidenceUnit unit = make_page_unit(page);
      ids.push_back(unit.evidence_id);
      add(unit, key);
    }
  } else {
    throw Error(ErrorCode::kNoneObservation,
                trajectory_id + " turn " + std::to_string(turn_index));
  }
  by_turn_.try_emplace(key);
  auto& count = turn_counts_[trajectory_id];
  count = std::max(count, turn_index);
  return ids;
}

void AcquisitionIndex::declare_trajectory(const std::string& trajectory_id,
                                          int num_turns) {
  auto& count = turn_counts_[trajectory_id];
  count = std::max(count, num_turns);
}

std::map<int, std::set<std::string>> AcquisitionIndex::turn_evidence_sets(
    const std::string& trajectory_id) const {
  const auto it = turn_counts_.find(trajectory_id);
  if (it == turn_counts_.end()) {
    throw Error(ErrorCode::kUnknownTrajectory, trajectory_id);
  }
  std::map<int, std::set<std::string>> out;
  for (int t = 1; t <= it->second; ++t) {
    const auto found = by_turn_.find(TurnKey{trajectory_id, t});
    out[t] = found == by_turn_.end() ? std::set<std::string>{} : found->second;
  }
  return out;
}

std::set<std::string> AcquisitionIndex::acquired_by(
    const std::string& trajectory_id) const {
  std::set<std::string> out;
  for (auto it = by_turn_.lower_bound(TurnKey{trajectory_id, 0});
       it != by_turn_.end() && it->first.first == trajectory_id; ++it) {
    out.insert(it->second.begin(), it->second.end());
  }
  return out;
}

std::set<std::string> AcquisitionIndex::acquirers(
    const std::string& evidence_id) const {
  const auto it = by_evidence_.find(evidence_id);
  if (it == by_evidence_.end()) {
    throw Error(ErrorCode::kUnknownEvidence, evidence_id);
  }
  std::set<std::string> out;
  for (const auto& key : it->second) out.insert(key.first);
  return out;
}

const EvidenceUnit& AcquisitionIndex::unit(
    const std::string& evidence_id) const {
  const auto it = units_.find(evidence_id);
  if (it == units_.end()) throw Error(ErrorCode::kUnknownEvidence, evidence_id);
  return it->second;
}

AcquisitionIndex build_index(const RolloutGroup& group) {
  AcquisitionIndex index;
  std::set<std::string> seen;
  for (const auto& t : group.trajectories) {
    if (!seen.insert(t.trajectory_id).second) {
      throw Error(ErrorCode::kDuplicateTrajectory, t.trajectory_id);
    }
    index.declare_trajectory(t.trajectory_id, t.num_turns());
    for (const auto& turn : t.turns) {
      if (std::holds_alternative<NoObservation>(turn.observation)) continue;
      index.register_observation(t.trajectory_id, turn.index,
                                 turn.observation);
    }
  }
  return index;
}

std::vector<EvidenceSummary> summarize_evidence(const RolloutGroup& group,
                                                const AcquisitionIndex& index) {
  std::map<std::string, int> outcome;
  for (const auto& t : group.trajectories) outcome[t.trajectory_id] = t.outcome;
  std::vector<EvidenceSummary> out;
  for (const auto& [id, unit] : index.units()) {
    EvidenceSummary s{unit, 0, 0, 0};
    for (const auto& tid : index.acquirers(id)) {
      ++s.n_trajectories;
      const auto it = outcome.find(tid);
      if (it != outcome.end() && it->second == 1) {
        ++s.n_success;
      } else {
        ++s.n_failure;
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace ica
