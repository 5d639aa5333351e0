// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failing criteria (capped at 1).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "ica/credit.hpp"
#include "ica/planner.hpp"
#include "ica/rollout_log.hpp"
#include "ica/simulator.hpp"
#include "ica/training.hpp"
#include "support/builders.hpp"
#include "support/fixtures.hpp"

namespace {

using namespace ica;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// --- estimator vs brute-force oracle ---------------------------------------

Outcome estimator_oracle() {
  const auto start = Clock::now();
  Rng rng(20240601);
  int mismatches = 0;
  std::size_t units = 0;
  for (int i = 0; i < 1000; ++i) {
    const RolloutGroup g = testing::random_small_group(rng, i);
    const AcquisitionIndex index = build_index(g);
    const auto engine = contribution_deltas(index, g);
    const auto oracle = oracle_delta(g, index);
    units += oracle.size();
    if (engine != oracle) ++mismatches;
  }
  const double secs = seconds_since(start);
  return {mismatches == 0 && secs < 10.0,
          "1000 groups, " + std::to_string(units) + " units, " +
              std::to_string(mismatches) + " mismatching groups, " +
              fmt_double(secs) + " s"};
}

// --- fallback rule ------------------------------------------------------------

Outcome fallback_rule() {
  using testing::TrajectoryBuilder;
  const std::string u = "https://fallback.test/";
  const std::string unit =
      make_search_item_unit(testing::item(u, 1)).evidence_id;
  bool ok = true;

  // Everyone acquired: the not-acquired branch has no members.
  const RolloutGroup all{"q", {TrajectoryBuilder("a").search({u}).answer(1),
                               TrajectoryBuilder("b").search({u}).answer(0),
                               TrajectoryBuilder("c").search({u}).answer(0)}};
  const auto neg = conditional_success(unit, build_index(all), all);
  ok = ok && neg.p_success_given_not == 1.0 / 3.0 &&
       neg.p_success_given_acquired == 1.0 / 3.0 &&
       neg.fallback_used == FallbackUsed::kNegBranch;

  // Nobody in the group acquired: the acquired branch has no members.
  const RolloutGroup other{"q", {TrajectoryBuilder("x").search({u}).answer(1)}};
  const RolloutGroup none{"q", {TrajectoryBuilder("a").answer(1),
                                TrajectoryBuilder("b").answer(1),
                                TrajectoryBuilder("c").answer(0),
                                TrajectoryBuilder("d").answer(0)}};
  const auto pos = conditional_success(unit, build_index(other), none);
  ok = ok && pos.p_success_given_acquired == 0.5 &&
       pos.p_success_given_not == 0.5 &&
       pos.fallback_used == FallbackUsed::kPosBranch;

  // Property groups: every zero-denominator branch equals the batch rate.
  Rng rng(77);
  int checked = 0;
  for (int i = 0; i < 500; ++i) {
    const RolloutGroup g = testing::random_small_group(rng, i);
    const AcquisitionIndex index = build_index(g);
    const double batch = batch_success_rate(g);
    for (const auto& [id, _] : index.by_evidence()) {
      const auto c = conditional_success(id, index, g);
      const std::size_t acquirers = index.acquirers(id).size();
      if (acquirers == g.trajectories.size()) {
        ++checked;
        ok = ok && c.p_success_given_not == batch &&
             c.fallback_used == FallbackUsed::kNegBranch;
      } else if (c.fallback_used != FallbackUsed::kNone) {
        ok = false;
      }
    }
  }
  return {ok, "constructed both branches; " + std::to_string(checked) +
                  " all-acquired units in property groups"};
}

// --- three-trajectory hand trace ------------------------------------------------

Outcome hand_trace() {
  using testing::TrajectoryBuilder;
  const std::string a = "https://a.test/";
  const std::string b = "https://b.test/";
  const std::string c = "https://c.test/";
  const RolloutGroup g{
      "q", {TrajectoryBuilder("n1").search({a, b}).fetch({a}).answer(1),
            TrajectoryBuilder("n2").search({a, b}).fetch({b}).search({c}).answer(0),
            TrajectoryBuilder("n3").search({c}).search({a, b}).fetch({a}).answer(1)}};
  CreditConfig cfg;  // omega 0.95, lambda 1, epsilon 1e-6
  const AdvantageTable table = compute_advantage_table(g, build_index(g), cfg);

  // Hand-evaluated by the rules:
  //   item a, item b: acquired by all, p0 falls back to 2/3 -> 0
  //   item c: p1 = 1/2, p0 = 1 -> -1/2
  //   page a: p1 = 1, p0 = 0 -> 1;  page b: p1 = 0, p0 = 1 -> -1
  // Search credits {0, 0, -1/2, -1/2, 0}: mean -0.2, variance 0.06.
  // Fetch credits {1, -0.95, 1} (n2's fetch is two turns from the end):
  //   mean 0.35, variance 0.845.
  // Outcomes (1, 0, 1): mean 2/3, variance 2/9.
  const double eps = 1e-6;
  const double s_mu = -0.2, s_sd = std::sqrt(0.06);
  const double f_mu = 0.35, f_sd = std::sqrt(0.845);
  const double r_sd = std::sqrt(2.0 / 9.0);
  const double a1 = (1.0 / 3.0) / (r_sd + eps);
  const double a2 = (-2.0 / 3.0) / (r_sd + eps);
  const double a3 = a1;
  auto s = [&](double v) { return (v - s_mu) / (s_sd + eps); };
  auto f = [&](double v) { return (v - f_mu) / (f_sd + eps); };

  struct Expect {
    const char* id;
    int turn;
    double mixed;
  };
  const std::vector<Expect> expected{
      {"n1", 1, a1 + s(0.0)},  {"n1", 2, a1 + f(1.0)},   {"n1", 3, 2 * a1},
      {"n2", 1, a2 + s(0.0)},  {"n2", 2, a2 + f(-0.95)}, {"n2", 3, a2 + s(-0.5)},
      {"n2", 4, 2 * a2},       {"n3", 1, a3 + s(-0.5)},  {"n3", 2, a3 + s(0.0)},
      {"n3", 3, a3 + f(1.0)},  {"n3", 4, 2 * a3}};

  double worst = 0.0;
  bool ok = table.turns.size() == expected.size();
  for (const auto& e : expected) {
    const TurnAdvantage* row = table.find(e.id, e.turn);
    if (row == nullptr) {
      ok = false;
      continue;
    }
    worst = std::max(worst, std::abs(row->mixed_advantage - e.mixed));
  }
  const std::vector<double> stats_err{
      std::abs(table.tool_stats.search.mean - s_mu),
      std::abs(table.tool_stats.search.stddev - s_sd),
      std::abs(table.tool_stats.fetch.mean - f_mu),
      std::abs(table.tool_stats.fetch.stddev - f_sd),
      std::abs(table.mu_r - 2.0 / 3.0), std::abs(table.sigma_r - r_sd),
      std::abs(table.find("n2", 2)->decayed_credit + 0.95)};
  for (double e : stats_err) worst = std::max(worst, e);
  ok = ok && worst <= 1e-12;
  return {ok, "11 turns, max abs error " + fmt_double(worst)};
}

// --- lambda = 0 reduction ------------------------------------------------------

Outcome lambda_zero() {
  CreditConfig zero;
  zero.lambda_weight = 0.0;
  Rng rng(5150);
  bool tables_ok = true;
  for (int i = 0; i < 300; ++i) {
    const RolloutGroup g = testing::random_small_group(rng, i);
    const AdvantageTable table = compute_advantage_table(g, build_index(g), zero);
    const auto terminal = terminal_advantage(g, zero);
    for (const auto& row : table.turns) {
      for (const auto& [id, adv] : terminal) {
        if (id == row.trajectory_id && row.mixed_advantage != adv) tables_ok = false;
      }
    }
  }
  const WorldSpec world = reference_world();
  int identical = 0;
  for (std::uint64_t seed : {1, 2, 3}) {
    UpdateConfig cfg;
    cfg.seed = seed;
    const TrainResult ica = train(world, Algo::kIca, cfg, zero);
    const TrainResult grpo = train(world, Algo::kGrpo, cfg, CreditConfig{});
    if (ica.series == grpo.series && ica.policy == grpo.policy) ++identical;
  }
  return {tables_ok && identical == 3,
          std::string("300 tables ") + (tables_ok ? "turn-constant" : "DIFFER") +
              "; train series identical on " + std::to_string(identical) + "/3 seeds"};
}

// --- clip mechanics ---------------------------------------------------------------

Outcome clip_mechanics() {
  const ClipBounds clip;  // [0.8, 1.28]
  bool ok = clipped_surrogate(1.5, 1.0, clip) == 1.28 &&
            clipped_surrogate(0.5, -1.0, clip) == -0.8 &&
            clipped_surrogate(1.0, 0.37, clip) == 0.37;

  // d/dratio by central differences against the analytic branch gradient,
  // away from the kinks at the bounds.
  double worst = 0.0;
  Rng rng(8);
  const double h = 1e-6;
  for (int i = 0; i < 2000; ++i) {
    const double r = 0.3 + 1.7 * rng.uniform();
    const double adv = 4 * rng.uniform() - 2;
    if (std::abs(r - clip.low) < 1e-3 || std::abs(r - clip.high) < 1e-3) continue;
    const double fd = (clipped_surrogate(r + h, adv, clip) -
                       clipped_surrogate(r - h, adv, clip)) / (2 * h);
    const double g = clipped_surrogate_grad(r, adv, clip);
    const double denom = std::max({std::abs(g), std::abs(fd), 1e-12});
    worst = std::max(worst, std::abs(g - fd) / denom);
  }
  ok = ok && worst <= 1e-5;
  return {ok, "worked examples exact; gradient-stop max rel error " + fmt_double(worst)};
}

// --- policy gradient check ---------------------------------------------------------

Outcome gradient_check() {
  const auto start = Clock::now();
  Rng rng(99);
  double worst = 0.0;
  int instances = 0;
  while (instances < 10) {
    std::vector<TrainingGroup> batch{testing::three_state_group(rng, 5)};
    const SoftmaxPolicy old_policy = testing::random_policy(rng, 1.0);
    SoftmaxPolicy policy = old_policy;
    const SoftmaxPolicy shift = testing::random_policy(rng, 0.6);
    for (const auto& [s, actions] : shift.table()) {
      for (const auto& [a, v] : actions) {
        policy.set_preference(s, a, policy.preference(s, a) + v);
      }
    }
    if (testing::distance_to_kink(policy, old_policy, batch, ClipBounds{}) < 1e-3) continue;
    worst = std::max(worst, testing::check_gradient(policy, old_policy, batch,
                                                    ClipBounds{})
                                .max_relative_error);
    ++instances;
  }
  const double secs = seconds_since(start);
  return {worst <= 1e-5 && secs < 1.0,
          "10 instances x 9 parameters, max rel error " + fmt_double(worst) + ", " +
              fmt_double(secs) + " s"};
}

// --- desk-scale learning claim -------------------------------------------------------

Outcome learning_claim() {
  const auto start = Clock::now();
  const WorldSpec world = reference_world();
  double grpo_final = 0.0;
  double ica_final = 0.0;
  int faster = 0;
  std::ostringstream per_seed;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    UpdateConfig cfg;  // 100 steps, G = 8
    cfg.seed = seed;
    const auto grpo = train(world, Algo::kGrpo, cfg, CreditConfig{});
    const auto ica = train(world, Algo::kIca, cfg, CreditConfig{});
    const double gf = final_success_rate(grpo.series);
    const double f = final_success_rate(ica.series);
    const int gs = steps_to_half_max(grpo.series, gf);
    const int is = steps_to_half_max(ica.series, f);
    grpo_final += gf / 5;
    ica_final += f / 5;
    if (is <= gs) ++faster;
    per_seed << " [" << seed << ": grpo " << fmt_double(gf) << "@" << gs << ", ica "
             << fmt_double(f) << "@" << is << "]";
  }
  const double secs = seconds_since(start);
  return {ica_final >= grpo_final && faster >= 3 && secs < 300.0,
          "mean final grpo " + fmt_double(grpo_final) + " ica " + fmt_double(ica_final) +
              ", ica half-max no later on " + std::to_string(faster) + "/5," +
              per_seed.str() + ", " + fmt_double(secs) + " s"};
}

// --- gold-evidence discrimination --------------------------------------------------

double sign_test_p(int positives, int n) {
  // One-sided P(X >= positives) for X ~ Binomial(n, 1/2).
  double p = 0.0;
  for (int k = positives; k <= n; ++k) {
    p += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                  std::lgamma(n - k + 1.0) - n * std::log(2.0));
  }
  return p;
}

Outcome gold_discrimination() {
  const WorldSpec world = reference_world();
  const SoftmaxPolicy uniform;
  double gold_sum = 0.0, other_sum = 0.0;
  std::size_t gold_n = 0, other_n = 0;
  int positive = 0, negative = 0, groups = 0;
  for (std::uint64_t round = 0; round < 60; ++round) {
    for (const auto& q : world.queries) {
      const RolloutGroup g = rollout_group(world, q.query_id, uniform, 8, 1000 * round);
      ++groups;
      const AcquisitionIndex index = build_index(g);
      const auto delta = contribution_deltas(index, g);
      double gs = 0.0, os = 0.0;
      int gn = 0, on = 0;
      for (const auto& [id, unit] : index.units()) {
        if (unit.kind != EvidenceKind::kPageSnapshot) continue;
        const bool gold = world.page(unit.canonical_url).gold_for.count(q.query_id) > 0;
        (gold ? gs : os) += delta.at(id);
        ++(gold ? gn : on);
      }
      gold_sum += gs;
      other_sum += os;
      gold_n += gn;
      other_n += on;
      if (gn == 0 || on == 0) continue;
      const double diff = gs / gn - os / on;
      if (diff > 0) ++positive;
      if (diff < 0) ++negative;
    }
  }
  const double gap = gold_sum / gold_n - other_sum / other_n;
  const double p = sign_test_p(positive, positive + negative);
  return {groups >= 200 && gap > 0 && p < 0.01,
          std::to_string(groups) + " groups, pooled gap " + fmt_double(gap) +
              ", sign test " + std::to_string(positive) + "+/" +
              std::to_string(negative) + "- p=" + fmt_double(p)};
}

// --- slice geometry ------------------------------------------------------------------

Outcome slice_geometry() {
  const SliceGeometry d;
  bool ok = d.slice_height == 4480 && d.overlap == 112 && d.cap == 20000 && d.scale == 0.7;
  const SlicePlan one = slice_plan(4480);
  ok = ok && one.slices == std::vector<Slice>{{0, 4480}} && !one.truncated;
  const SlicePlan three = slice_plan(9000);
  ok = ok && three.slices == std::vector<Slice>{{0, 4480}, {4368, 8848}, {8736, 9000}} &&
       !three.truncated && three.effective_height == 9000;
  const SlicePlan capped = slice_plan(25000);
  ok = ok && capped.truncated && capped.effective_height == 20000 &&
       capped.slices ==
           std::vector<Slice>{{0, 4480}, {4368, 8848}, {8736, 13216}, {13104, 17584},
                              {17472, 20000}} &&
       capped.scale_factor == 0.7;
  return {ok, "4480 -> 1, 9000 -> 3, 25000 -> 5 slices (capped at 20000)"};
}

// --- budget safety --------------------------------------------------------------------

Outcome budget_safety() {
  Rng rng(4096);
  std::int64_t max_final = 0;
  std::size_t max_selected = 0;
  for (int i = 0; i < 10000; ++i) {
    std::vector<std::int64_t> lengths(1 + rng.below(80));
    for (auto& l : lengths) l = 1 + static_cast<std::int64_t>(rng.below(rng.below(2) ? 300 : 3000));
    ChunkPlan plan = chunk_merge(lengths);
    std::vector<double> scores(plan.chunks.size());
    for (auto& s : scores) s = rng.below(4) == 0 ? 0.5 : rng.uniform();
    plan = select_and_truncate(std::move(plan), scores);
    max_final = std::max(max_final, plan.final_token_count);
    max_selected = std::max(max_selected, plan.selected.size());
  }
  return {max_final <= kContextBudget && max_selected <= kTopK,
          "10000 inputs, max final tokens " + std::to_string(max_final) +
              ", max selected " + std::to_string(max_selected)};
}

// --- rollout-log round trip ---------------------------------------------------------

Outcome round_trip() {
  Rng rng(31337);
  std::vector<RolloutGroup> groups;
  for (int i = 0; i < 500; ++i) {
    groups.push_back(testing::random_group(rng, "query-" + std::to_string(i),
                                           1 + static_cast<int>(rng.below(6))));
  }
  std::ostringstream first;
  write_rollout_log(groups, first);
  std::istringstream in(first.str());
  const auto parsed = read_rollout_log(in);
  std::ostringstream second;
  write_rollout_log(parsed, second);
  const bool ok = parsed == groups && second.str() == first.str();
  return {ok, "500 groups, " + std::to_string(first.str().size()) + " bytes, " +
                  (ok ? "identical" : "DIFFERENT")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"estimator-oracle-equivalence", estimator_oracle},
      {"fallback-rule", fallback_rule},
      {"three-trajectory-hand-trace", hand_trace},
      {"lambda-zero-reduction", lambda_zero},
      {"clip-mechanics", clip_mechanics},
      {"gradient-check", gradient_check},
      {"desk-scale-learning", learning_claim},
      {"gold-evidence-discrimination", gold_discrimination},
      {"slice-geometry", slice_geometry},
      {"budget-safety", budget_safety},
      {"rollout-log-round-trip", round_trip},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
