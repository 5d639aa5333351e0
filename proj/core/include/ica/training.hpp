// SPDX-License-Identifier: Apache-2.0

#ifndef ICA_TRAINING_HPP_
#define ICA_TRAINING_HPP_

#include <optional>
#include <string_view>
#include <vector>

#include "ica/credit.hpp"
#include "ica/policy.hpp"
#include "ica/simulator.hpp"

namespace ica {

enum class Algo { kGrpo, kIca };

std::string_view to_string(Algo algo);
std::optional<Algo> parse_algo(std::string_view name);

struct TrainStep {
  int step = 0;
  double success_rate = 0.0;  // over every sampled episode, before filtering
  double objective = 0.0;
  double clip_fraction = 0.0;
  double mean_abs_advantage = 0.0;
  double mean_ratio = 1.0;
  friend bool operator==(const TrainStep&, const TrainStep&) = default;
};

struct TrainResult {
  std::vector<TrainStep> series;
  SoftmaxPolicy policy;
};

/// Each step samples G trajectories per query from the current policy,
/// scores them (lambda forced to 0 for GRPO), optionally drops
/// uniform-outcome groups and takes one update. Fully determined by
/// cfg.seed.
TrainResult train(const WorldSpec& world, Algo algo, const UpdateConfig& cfg,
                  const CreditConfig& credit_cfg,
                  const SoftmaxPolicy& initial = SoftmaxPolicy{});

/// Mean success rate over the trailing `window` steps (clamped to the series).
double final_success_rate(const std::vector<TrainStep>& series, int window = 10);

/// First step (1-based) whose trailing `smoothing`-step mean success reaches
/// half of `target`; series.size() + 1 when never reached.
int steps_to_half_max(const std::vector<TrainStep>& series, double target,
                      int smoothing = 5);

double mean_clip_fraction(const std::vector<TrainStep>& series);

}  // namespace ica

#endif  // ICA_TRAINING_HPP_
