// SPDX-License-Identifier: Apache-2.0

#include "ica/rollout_log.hpp"

#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include <json.hpp>

#include "ica/error.hpp"

namespace ica {

using nlohmann::json;

namespace {

json action_to_json(const Action& action) {
  json out;
  if (const auto* s = std::get_if<SearchAction>(&action)) {
    out["kind"] = "search";
    out["payload"] = {{"queries", s->queries}};
  } else if (const auto* f = std::get_if<FetchAction>(&action)) {
    out["kind"] = "fetch";
    out["payload"] = {{"urls", f->urls}};
  } else {
    out["kind"] = "answer";
    out["payload"] = {{"answer_text", std::get<AnswerAction>(action).text}};
  }
  return out;
}

json observation_to_json(const Observation& obs) {
  json out;
  if (const auto* r = std::get_if<SearchResults>(&obs)) {
    json items = json::array();
    for (const auto& item : r->items) {
      items.push_back({{"url", item.url},
                       {"title", item.title},
                       {"snippet", item.snippet},
                       {"rank", item.rank}});
    }
    out["kind"] = "search_results";
    out["payload"] = {{"items", std::move(items)}};
  } else if (const auto* p = std::get_if<FetchedPages>(&obs)) {
    json pages = json::array();
    for (const auto& page : p->pages) {
      pages.push_back(
          {{"url", page.url},
           {"content_digest", page.content_digest},
           {"content_kind",
            page.content_kind == ContentKind::kSnapshot ? "snapshot" : "text"},
           {"token_count", page.token_count}});
    }
    out["kind"] = "fetched_pages";
    out["payload"] = {{"pages", std::move(pages)}};
  } else {
    out["kind"] = "none";
    out["payload"] = nullptr;
  }
  return out;
}

// Field access that reports the dotted path of whatever is missing or
// mistyped.
class RecordReader {
 public:
  explicit RecordReader(std::size_t line) : line_(line) {}

  [[noreturn]] void fail(const std::string& field) const {
    throw Error(ErrorCode::kMalformedRecord,
                "line " + std::to_string(line_) + ", field " + field);
  }

  const json& at(const json& obj, const char* key,
                 const std::string& path) const {
    if (!obj.is_object()) fail(path);
    auto it = obj.find(key);
    if (it == obj.end()) fail(path + key);
    return *it;
  }

  std::string str(const json& obj, const char* key,
                  const std::string& path = "") const {
    const json& v = at(obj, key, path);
    if (!v.is_string()) fail(path + key);
    return v.get<std::string>();
  }

  std::uint64_t uint(const json& obj, const char* key,
                     const std::string& path = "") const {
    const json& v = at(obj, key, path);
    if (!v.is_number_unsigned()) fail(path + key);
    return v.get<std::uint64_t>();
  }

  int integer(const json& obj, const char* key,
              const std::string& path = "") const {
    const json& v = at(obj, key, path);
    if (!v.is_number_integer()) fail(path + key);
    return v.get<int>();
  }

  std::vector<std::string> strings(const json& obj, const char* key,
                                   const std::string& path) const {
    const json& v = at(obj, key, path);
    if (!v.is_array()) fail(path + key);
    std::vector<std::string> out;
    for (const auto& s : v) {
      if (!s.is_string()) fail(path + key);
      out.push_back(s.get<std::string>());
    }
    return out;
  }

  const json& array(const json& obj, const char* key,
                    const std::string& path) const {
    const json& v = at(obj, key, path);
    if (!v.is_array()) fail(path + key);
    return v;
  }

 private:
  std::size_t line_;
};

Action action_from_json(const json& j, const RecordReader& rd,
                        const std::string& path) {
  const std::string kind = rd.str(j, "kind", path);
  const json& payload = rd.at(j, "payload", path);
  const std::string pp = path + "payload.";
  if (kind == "search") return SearchAction{rd.strings(payload, "queries", pp)};
  if (kind == "fetch") return FetchAction{rd.strings(payload, "urls", pp)};
  if (kind == "answer") return AnswerAction{rd.str(payload, "answer_text", pp)};
  rd.fail(path + "kind");
}

Observation observation_from_json(const json& j, const RecordReader& rd,
                                  const std::string& path) {
  const std::string kind = rd.str(j, "kind", path);
  const json& payload = rd.at(j, "payload", path);
  const std::string pp = path + "payload.";
  if (kind == "none") {
    if (!payload.is_null()) rd.fail(pp);
    return NoObservation{};
  }
  if (kind == "search_results") {
    SearchResults out;
    const json& items = rd.array(payload, "items", pp);
    for (std::size_t i = 0; i < items.size(); ++i) {
      const std::string ip = pp + "items[" + std::to_string(i) + "].";
      out.items.push_back({rd.str(items[i], "url", ip),
                           rd.str(items[i], "title", ip),
                           rd.str(items[i], "snippet", ip),
                           rd.integer(items[i], "rank", ip)});
    }
    return out;
  }
  if (kind == "fetched_pages") {
    FetchedPages out;
    const json& pages = rd.array(payload, "pages", pp);
    for (std::size_t i = 0; i < pages.size(); ++i) {
      const std::string ip = pp + "pages[" + std::to_string(i) + "].";
      PageRef page;
      page.url = rd.str(pages[i], "url", ip);
      page.content_digest = rd.str(pages[i], "content_digest", ip);
      const std::string ck = rd.str(pages[i], "content_kind", ip);
      if (ck == "snapshot") {
        page.content_kind = ContentKind::kSnapshot;
      } else if (ck == "text") {
        page.content_kind = ContentKind::kText;
      } else {
        rd.fail(ip + "content_kind");
      }
      page.token_count = rd.uint(pages[i], "token_count", ip);
      out.pages.push_back(std::move(page));
    }
    return out;
  }
  rd.fail(path + "kind");
}

}  // namespace

std::string serialize_trajectory(const Trajectory& t) {
  json turns = json::array();
  for (const auto& turn : t.turns) {
    turns.push_back({{"index", turn.index},
                     {"reasoning_digest", turn.reasoning_digest},
                     {"action", action_to_json(turn.action)},
                     {"observation", observation_to_json(turn.observation)},
                     {"generated_token_count", turn.generated_token_count}});
  }
  json record = {{"schema_version", kRolloutSchemaVersion},
                 {"trajectory_id", t.trajectory_id},
                 {"query_id", t.query_id},
                 {"query_text", t.query_text},
                 {"outcome", t.outcome},
                 {"total_generated_tokens", t.total_generated_tokens},
                 {"turns", std::move(turns)}};
  return record.dump();
}

Trajectory parse_trajectory_record(std::string_view line,
                                   std::size_t line_number) {
  const RecordReader rd(line_number);
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error&) {
    rd.fail("<record>");
  }
  if (!j.is_object()) rd.fail("<record>");
  if (rd.integer(j, "schema_version") != kRolloutSchemaVersion) {
    rd.fail("schema_version");
  }
  Trajectory t;
  t.trajectory_id = rd.str(j, "trajectory_id");
  t.query_id = rd.str(j, "query_id");
  t.query_text = rd.str(j, "query_text");
  t.outcome = rd.integer(j, "outcome");
  if (t.outcome != 0 && t.outcome != 1) rd.fail("outcome");
  t.total_generated_tokens = rd.uint(j, "total_generated_tokens");
  const json& turns = rd.array(j, "turns", "");
  for (std::size_t i = 0; i < turns.size(); ++i) {
    const std::string path = "turns[" + std::to_string(i) + "].";
    Turn turn;
    turn.index = rd.integer(turns[i], "index", path);
    turn.reasoning_digest = rd.str(turns[i], "reasoning_digest", path);
    turn.action =
        action_from_json(rd.at(turns[i], "action", path), rd, path + "action.");
    turn.observation = observation_from_json(
        rd.at(turns[i], "observation", path), rd, path + "observation.");
    turn.generated_token_count =
        rd.uint(turns[i], "generated_token_count", path);
    t.turns.push_back(std::move(turn));
  }
  return t;
}

std::vector<RolloutGroup> read_rollout_log(std::istream& in) {
  std::vector<RolloutGroup> groups;
  std::map<std::string, std::size_t> slot;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Trajectory t = parse_trajectory_record(line, line_number);
    const ValidationReport report = validate_trajectory(t);
    if (!report.empty()) {
      throw Error(ErrorCode::kInvariantViolation,
                  "trajectory " + t.trajectory_id + ": " + report.front().code +
                      " (" + report.front().detail + ")");
    }
    auto [it, inserted] = slot.try_emplace(t.query_id, groups.size());
    if (inserted) groups.push_back(RolloutGroup{t.query_id, {}});
    groups[it->second].trajectories.push_back(std::move(t));
  }
  return groups;
}

std::vector<RolloutGroup> parse_rollout_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return read_rollout_log(in);
}

void write_rollout_log(const std::vector<RolloutGroup>& groups,
                       std::ostream& out) {
  for (const auto& group : groups) {
    for (const auto& t : group.trajectories) {
      out << serialize_trajectory(t) << '\n';
    }
  }
}

void write_rollout_log(const std::vector<RolloutGroup>& groups,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  write_rollout_log(groups, out);
  out.flush();
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

}  // namespace ica
