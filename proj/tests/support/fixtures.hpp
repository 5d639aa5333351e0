// SPDX-License-Identifier: Apache-2.0

// Small hand-sized learning problems shared by the policy tests and the
// acceptance suite.

#ifndef ICA_TESTS_FIXTURES_HPP_
#define ICA_TESTS_FIXTURES_HPP_

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ica/policy.hpp"
#include "support/builders.hpp"

namespace ica::testing {

inline const std::vector<std::string>& three_actions() {
  static const std::vector<std::string> kActions = {"a", "b", "c"};
  return kActions;
}

/// Random preferences over three states x three actions.
inline SoftmaxPolicy random_policy(Rng& rng, double scale,
                                   double temperature = 1.0) {
  SoftmaxPolicy p(temperature);
  for (int s = 0; s < 3; ++s) {
    for (const auto& a : three_actions()) {
      p.set_preference("s" + std::to_string(s), a, scale * (2 * rng.uniform() - 1));
    }
  }
  return p;
}

/// One group of trajectories whose turns are decisions over states s0..s2
/// with random token counts and random advantages.
inline TrainingGroup three_state_group(Rng& rng, int trajectories = 4) {
  TrainingGroup tg;
  tg.group.query_id = "q";
  tg.table.query_id = "q";
  for (int n = 0; n < trajectories; ++n) {
    const std::string id = "t" + std::to_string(n);
    TrajectoryBuilder b(id, "q");
    const int tool_turns = 1 + static_cast<int>(rng.below(3));
    for (int i = 0; i < tool_turns; ++i) {
      b.search({"https://x.test/" + std::to_string(i)}).tokens(1 + rng.below(40));
    }
    b.answer(static_cast<int>(rng.below(2)), 1 + rng.below(10));
    Trajectory t = b.build();
    std::vector<Decision> decisions;
    for (const Turn& turn : t.turns) {
      Decision d;
      d.state = "s" + std::to_string(rng.below(3));
      d.legal = three_actions();
      d.action = d.legal[rng.below(3)];
      d.turn = turn.index;
      decisions.push_back(d);
      TurnAdvantage row;
      row.trajectory_id = id;
      row.turn_index = turn.index;
      row.mixed_advantage = 2 * rng.uniform() - 1;
      row.token_count = turn.generated_token_count;
      tg.table.turns.push_back(row);
    }
    tg.decisions.push_back(std::move(decisions));
    tg.group.trajectories.push_back(std::move(t));
  }
  return tg;
}

/// Smallest distance from any sampled ratio to a clip bound.
inline double distance_to_kink(const SoftmaxPolicy& policy,
                               const SoftmaxPolicy& old_policy,
                               const std::vector<TrainingGroup>& batch,
                               const ClipBounds& clip) {
  double best = 1e300;
  for (const auto& tg : batch) {
    for (const auto& ds : tg.decisions) {
      for (const auto& d : ds) {
        const double r = std::exp(policy.log_prob(d.state, d.legal, d.action) -
                                  old_policy.log_prob(d.state, d.legal, d.action));
        best = std::min({best, std::abs(r - clip.low), std::abs(r - clip.high)});
      }
    }
  }
  return best;
}

struct GradientCheck {
  double max_relative_error = 0.0;
  int parameters = 0;
};

/// Central differences on every (state, action) preference against the
/// analytic gradient. Relative error is |g - fd| / max(|g|, |fd|, floor).
inline GradientCheck check_gradient(const SoftmaxPolicy& policy,
                                    const SoftmaxPolicy& old_policy,
                                    const std::vector<TrainingGroup>& batch,
                                    const ClipBounds& clip, double h = 1e-6,
                                    double floor = 1e-6) {
  const auto analytic = evaluate_objective(policy, old_policy, batch, clip).gradient;
  GradientCheck out;
  for (int s = 0; s < 3; ++s) {
    const std::string state = "s" + std::to_string(s);
    for (const auto& a : three_actions()) {
      SoftmaxPolicy plus = policy;
      SoftmaxPolicy minus = policy;
      plus.set_preference(state, a, policy.preference(state, a) + h);
      minus.set_preference(state, a, policy.preference(state, a) - h);
      const double fd =
          (evaluate_objective(plus, old_policy, batch, clip).objective -
           evaluate_objective(minus, old_policy, batch, clip).objective) /
          (2 * h);
      double g = 0.0;
      if (auto it = analytic.find(state); it != analytic.end()) {
        if (auto jt = it->second.find(a); jt != it->second.end()) g = jt->second;
      }
      const double denom = std::max({std::abs(g), std::abs(fd), floor});
      out.max_relative_error = std::max(out.max_relative_error, std::abs(g - fd) / denom);
      ++out.parameters;
    }
  }
  return out;
}

}  // namespace ica::testing

#endif  // ICA_TESTS_FIXTURES_HPP_
