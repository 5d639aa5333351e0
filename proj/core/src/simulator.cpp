// SPDX-License-Identifier: Apache-2.0

#include "ica/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ica/digest.hpp"
#include "ica/error.hpp"
#include "ica/rng.hpp"

namespace ica {

using nlohmann::json;

const PageSpec& WorldSpec::page(const std::string& url) const {
  for (const auto& p : pages) {
    if (p.url == url) return p;
  }
  throw Error(ErrorCode::kInvariantViolation, "unknown page " + url);
}

const QuerySpec& WorldSpec::query(const std::string& query_id) const {
  for (const auto& q : queries) {
    if (q.query_id == query_id) return q;
  }
  throw Error(ErrorCode::kUnknownQuery, query_id);
}

WorldSpec generate_world(const WorldParams& params) {
  if (params.n_pages < 1 || params.n_queries < 1 ||
      params.n_gold_per_query < 1 || params.distractor_ratio < 0.0 ||
      params.results_per_search < 1 || params.max_turns < 3) {
    throw Error(ErrorCode::kPreconditionFailed, "invalid world parameters");
  }
  const int n_gold_total = params.n_gold_per_query * params.n_queries;
  const int n_distract = static_cast<int>(
      std::lround(params.distractor_ratio * params.n_gold_per_query));
  if (n_gold_total > params.n_pages ||
      n_distract > params.n_pages - params.n_gold_per_query) {
    throw Error(ErrorCode::kInfeasibleSpec,
                std::to_string(params.n_pages) + " pages cannot host " +
                    std::to_string(params.n_gold_per_query) + " gold x " +
                    std::to_string(params.n_queries) + " queries with " +
                    std::to_string(n_distract) + " distractors each");
  }
  if (2 * params.n_gold_per_query + 1 > params.max_turns) {
    throw Error(ErrorCode::kInfeasibleSpec,
                "max_turns too small to fetch every gold page");
  }

  Rng rng(derive_seed(params.seed, {0x776f726c64ULL}));
  WorldSpec world;
  world.results_per_search = params.results_per_search;
  world.max_turns = params.max_turns;
  world.seed = params.seed;

  for (int i = 0; i < params.n_pages; ++i) {
    PageSpec p;
    p.url = "https://site" + std::to_string(i % 4) + ".example/doc/" +
            std::to_string(i);
    p.payload_digest = sha256_hex("world:" + std::to_string(params.seed) +
                                  ":page:" + std::to_string(i));
    p.token_cost = 200 + rng.below(1800);
    p.title = "Document " + std::to_string(i);
    p.snippet = "Excerpt " + p.payload_digest.substr(0, 12);
    world.pages.push_back(std::move(p));
  }

  std::vector<int> order(params.n_pages);
  for (int i = 0; i < params.n_pages; ++i) order[i] = i;
  rng.shuffle(order.begin(), order.end());

  for (int qi = 0; qi < params.n_queries; ++qi) {
    QuerySpec q;
    q.query_id = "q" + std::to_string(qi + 1);
    q.query_text = "Which facts connect topic " + std::to_string(qi + 1) + "?";
    std::vector<int> gold(order.begin() + qi * params.n_gold_per_query,
                          order.begin() + (qi + 1) * params.n_gold_per_query);
    for (int g : gold) {
      world.pages[g].gold_for.insert(q.query_id);
      q.gold_evidence.push_back(world.pages[g].url);
    }
    std::sort(q.gold_evidence.begin(), q.gold_evidence.end());

    std::vector<int> candidates;
    for (int i = 0; i < params.n_pages; ++i) {
      if (std::find(gold.begin(), gold.end(), i) == gold.end()) {
        candidates.push_back(i);
      }
    }
    rng.shuffle(candidates.begin(), candidates.end());
    candidates.resize(n_distract);

    const int total = static_cast<int>(gold.size()) + n_distract;
    const int n_pools = std::max(
        1, (total + params.results_per_search - 1) / params.results_per_search);
    std::vector<std::vector<int>> pools(n_pools);
    for (std::size_t j = 0; j < gold.size(); ++j) {
      pools[j % n_pools].push_back(gold[j]);
    }
    std::size_t next = 0;
    for (auto& pool : pools) {
      while (static_cast<int>(pool.size()) < params.results_per_search &&
             next < candidates.size()) {
        pool.push_back(candidates[next++]);
      }
    }
    for (int j = 0; j < n_pools; ++j) {
      auto& pool = pools[j];
      rng.shuffle(pool.begin(), pool.end());
      // Keep gold off the top rank whenever a distractor can take it.
      const auto is_gold = [&](int page) {
        return std::find(gold.begin(), gold.end(), page) != gold.end();
      };
      if (!pool.empty() && is_gold(pool.front())) {
        const auto d = std::find_if(pool.begin(), pool.end(),
                                    [&](int page) { return !is_gold(page); });
        if (d != pool.end()) std::iter_swap(pool.begin(), d);
      }
      std::vector<std::string> urls;
      for (int page : pool) urls.push_back(world.pages[page].url);
      q.search_pools.emplace("k" + std::to_string(j), std::move(urls));
    }
    world.queries.push_back(std::move(q));
  }
  for (auto& p : world.pages) p.is_distractor = p.gold_for.empty();
  validate_world(world);
  return world;
}

WorldSpec reference_world(std::uint64_t seed) {
  WorldParams params;
  params.seed = seed;
  return generate_world(params);
}

void validate_world(const WorldSpec& world) {
  const auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kInvariantViolation, "world: " + what);
  };
  if (world.max_turns < 3) fail("max_turns < 3");
  if (world.results_per_search < 1) fail("results_per_search < 1");
  std::set<std::string> urls;
  for (const auto& p : world.pages) {
    if (!urls.insert(p.url).second) fail("duplicate page " + p.url);
    if (p.token_cost == 0) fail("zero token cost " + p.url);
    if (p.is_distractor && !p.gold_for.empty()) {
      fail("page both gold and distractor " + p.url);
    }
  }
  std::set<std::string> ids;
  for (const auto& q : world.queries) {
    if (!ids.insert(q.query_id).second) fail("duplicate query " + q.query_id);
    if (q.gold_evidence.empty()) fail("no gold evidence for " + q.query_id);
    for (const auto& [key, pool] : q.search_pools) {
      for (const auto& url : pool) {
        if (!urls.contains(url)) fail("unresolved url " + url);
      }
    }
    for (const auto& gold : q.gold_evidence) {
      if (!urls.contains(gold)) fail("unresolved gold " + gold);
      if (!world.page(gold).gold_for.contains(q.query_id)) {
        fail("gold page not marked gold " + gold);
      }
      bool reachable = false;
      for (const auto& [key, pool] : q.search_pools) {
        const auto shown = std::min<std::size_t>(
            pool.size(), static_cast<std::size_t>(world.results_per_search));
        reachable = reachable ||
                    std::find(pool.begin(), pool.begin() + shown, gold) !=
                        pool.begin() + shown;
      }
      if (!reachable) fail("gold unreachable by search " + gold);
    }
  }
}

std::string serialize_world(const WorldSpec& world) {
  json pages = json::array();
  for (const auto& p : world.pages) {
    pages.push_back({{"url", p.url},
                     {"payload_digest", p.payload_digest},
                     {"token_cost", p.token_cost},
                     {"gold_for", p.gold_for},
                     {"is_distractor", p.is_distractor},
                     {"title", p.title},
                     {"snippet", p.snippet}});
  }
  json queries = json::array();
  for (const auto& q : world.queries) {
    queries.push_back({{"query_id", q.query_id},
                       {"query_text", q.query_text},
                       {"gold_evidence", q.gold_evidence},
                       {"search_pools", q.search_pools}});
  }
  json doc = {{"schema_version", 1},
              {"results_per_search", world.results_per_search},
              {"max_turns", world.max_turns},
              {"seed", world.seed},
              {"pages", std::move(pages)},
              {"queries", std::move(queries)}};
  return doc.dump(2) + "\n";
}

WorldSpec parse_world(const std::string& text) {
  WorldSpec world;
  try {
    const json doc = json::parse(text);
    if (doc.at("schema_version").get<int>() != 1) {
      throw Error(ErrorCode::kMalformedRecord, "world: schema_version");
    }
    world.results_per_search = doc.at("results_per_search").get<int>();
    world.max_turns = doc.at("max_turns").get<int>();
    world.seed = doc.at("seed").get<std::uint64_t>();
    for (const auto& p : doc.at("pages")) {
      PageSpec page;
      page.url = p.at("url").get<std::string>();
      page.payload_digest = p.at("payload_digest").get<std::string>();
      page.token_cost = p.at("token_cost").get<std::uint64_t>();
      page.gold_for = p.at("gold_for").get<std::set<std::string>>();
      page.is_distractor = p.at("is_distractor").get<bool>();
      page.title = p.value("title", std::string{});
      page.snippet = p.value("snippet", std::string{});
      world.pages.push_back(std::move(page));
    }
    for (const auto& q : doc.at("queries")) {
      QuerySpec query;
      query.query_id = q.at("query_id").get<std::string>();
      query.query_text = q.at("query_text").get<std::string>();
      query.gold_evidence =
          q.at("gold_evidence").get<std::vector<std::string>>();
      std::sort(query.gold_evidence.begin(), query.gold_evidence.end());
      query.search_pools =
          q.at("search_pools")
              .get<std::map<std::string, std::vector<std::string>>>();
      world.queries.push_back(std::move(query));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, std::string("world: ") + e.what());
  }
  validate_world(world);
  return world;
}

WorldSpec load_world(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_world(buffer.str());
}

void save_world(const WorldSpec& world, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << serialize_world(world);
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

std::string state_key(const std::string& query_id, unsigned mask,
                      const std::string& last) {
  return query_id + "|m" + std::to_string(mask) + "|" + last;
}

Episode run_episode_traced(const WorldSpec& world, const std::string& query_id,
                           const Policy& policy, std::uint64_t seed) {
  const QuerySpec& q = world.query(query_id);
  const unsigned full_mask = (1u << q.gold_evidence.size()) - 1u;
  Rng rng(seed);
  Episode ep;
  Trajectory& traj = ep.trajectory;
  traj.trajectory_id = query_id + ":" + std::to_string(seed);
  traj.query_id = query_id;
  traj.query_text = q.query_text;

  unsigned mask = 0;
  std::string last = "start";
  std::vector<std::string> shown;  // urls of the previous turn's results

  for (int t = 1;; ++t) {
    Decision d;
    d.turn = t;
    d.state = state_key(query_id, mask, last);
    d.legal.push_back("answer");
    if (t < world.max_turns) {
      for (const auto& [key, _] : q.search_pools) {
        d.legal.push_back("search:" + key);
      }
      if (last.starts_with("search:")) {
        for (std::size_t r = 1; r <= shown.size(); ++r) {
          d.legal.push_back("fetch:" + std::to_string(r));
        }
      }
    }
    d.action = d.legal.size() == 1 ? d.legal.front() : policy.choose(d, rng);
    if (std::find(d.legal.begin(), d.legal.end(), d.action) == d.legal.end()) {
      throw Error(ErrorCode::kPreconditionFailed,
                  "policy chose illegal action " + d.action + " at " + d.state);
    }

    Turn turn;
    turn.index = t;
    turn.reasoning_digest = sha256_hex(d.state + "->" + d.action);
    turn.generated_token_count = 1;
    if (d.action.starts_with("search:")) {
      const std::string key = d.action.substr(7);
      const auto& pool = q.search_pools.at(key);
      SearchResults results;
      shown.clear();
      const std::size_t n = std::min<std::size_t>(
          pool.size(), static_cast<std::size_t>(world.results_per_search));
      for (std::size_t r = 0; r < n; ++r) {
        const PageSpec& page = world.page(pool[r]);
        results.items.push_back(
            {page.url, page.title, page.snippet, static_cast<int>(r) + 1});
        shown.push_back(page.url);
      }
      turn.action = SearchAction{{key}};
      turn.observation = std::move(results);
      last = d.action;
    } else if (d.action.starts_with("fetch:")) {
      const std::size_t rank = std::stoul(d.action.substr(6));
      const PageSpec& page = world.page(shown.at(rank - 1));
      turn.action = FetchAction{{page.url}};
      turn.observation = FetchedPages{
          {PageRef{page.url, page.payload_digest, ContentKind::kSnapshot,
                   page.token_cost}}};
      const auto g = std::lower_bound(q.gold_evidence.begin(),
                                      q.gold_evidence.end(), page.url);
      if (g != q.gold_evidence.end() && *g == page.url) {
        mask |= 1u << (g - q.gold_evidence.begin());
      }
      shown.clear();
      last = "fetch";
    } else {
      turn.action = AnswerAction{"answer:" + query_id};
      turn.observation = NoObservation{};
    }
    traj.total_generated_tokens += turn.generated_token_count;
    traj.turns.push_back(std::move(turn));
    ep.decisions.push_back(std::move(d));
    if (is_answer(traj.turns.back())) break;
  }
  traj.outcome = mask == full_mask ? 1 : 0;
  return ep;
}

Trajectory run_episode(const WorldSpec& world, const std::string& query_id,
                       const Policy& policy, std::uint64_t seed) {
  return run_episode_traced(world, query_id, policy, seed).trajectory;
}

TracedGroup rollout_group_traced(const WorldSpec& world,
                                 const std::string& query_id,
                                 const Policy& policy, int group_size,
                                 std::uint64_t seed) {
  if (group_size < 2) {
    throw Error(ErrorCode::kPreconditionFailed,
                "group size " + std::to_string(group_size) + " < 2");
  }
  TracedGroup out;
  out.group.query_id = query_id;
  for (int n = 1; n <= group_size; ++n) {
    Episode ep = run_episode_traced(world, query_id, policy,
                                    seed + static_cast<std::uint64_t>(n));
    out.group.trajectories.push_back(std::move(ep.trajectory));
    out.decisions.push_back(std::move(ep.decisions));
  }
  return out;
}

RolloutGroup rollout_group(const WorldSpec& world, const std::string& query_id,
                           const Policy& policy, int group_size,
                           std::uint64_t seed) {
  return rollout_group_traced(world, query_id, policy, group_size, seed).group;
}

std::map<std::string, double> oracle_delta(const RolloutGroup& group,
                                           const AcquisitionIndex& index) {
  std::map<std::string, std::set<std::string>> acquired;
  std::set<std::string> universe;
  for (const auto& [key, ids] : index.by_turn()) {
    acquired[key.first].insert(ids.begin(), ids.end());
    universe.insert(ids.begin(), ids.end());
  }
  long successes = 0;
  for (const auto& t : group.trajectories) successes += t.outcome;
  const double n = static_cast<double>(group.trajectories.size());

  std::map<std::string, double> out;
  for (const auto& e : universe) {
    long with = 0, with_success = 0, without = 0, without_success = 0;
    for (const auto& t : group.trajectories) {
      const auto it = acquired.find(t.trajectory_id);
      const bool has = it != acquired.end() && it->second.contains(e);
      if (has) {
        ++with;
        if (t.outcome == 1) ++with_success;
      } else {
        ++without;
        if (t.outcome == 1) ++without_success;
      }
    }
    const double batch = static_cast<double>(successes) / n;
    const double p1 = with == 0 ? batch
                                : static_cast<double>(with_success) /
                                      static_cast<double>(with);
    const double p0 = without == 0 ? batch
                                   : static_cast<double>(without_success) /
                                         static_cast<double>(without);
    out[e] = p1 - p0;
  }
  return out;
}

ScriptedPolicy ScriptedPolicy::from_json(const std::string& text) {
  try {
    return ScriptedPolicy(
        json::parse(text)
            .get<std::map<std::string, std::vector<std::string>>>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, std::string("script: ") + e.what());
  }
}

std::string ScriptedPolicy::choose(const Decision& context, Rng&) const {
  const std::string query_id = context.state.substr(0, context.state.find('|'));
  const auto it = script_.find(query_id);
  if (it == script_.end() || context.turn < 1 ||
      context.turn > static_cast<int>(it->second.size())) {
    return "answer";
  }
  return it->second[context.turn - 1];
}

std::map<std::string, std::vector<std::string>> gold_script(
    const WorldSpec& world) {
  std::map<std::string, std::vector<std::string>> script;
  for (const auto& q : world.queries) {
    auto& actions = script[q.query_id];
    for (const auto& gold : q.gold_evidence) {
      for (const auto& [key, pool] : q.search_pools) {
        const auto shown = std::min<std::size_t>(
            pool.size(), static_cast<std::size_t>(world.results_per_search));
        const auto it = std::find(pool.begin(), pool.begin() + shown, gold);
        if (it == pool.begin() + shown) continue;
        actions.push_back("search:" + key);
        actions.push_back("fetch:" + std::to_string(it - pool.begin() + 1));
        break;
      }
    }
    actions.push_back("answer");
  }
  return script;
}

}  // namespace ica
