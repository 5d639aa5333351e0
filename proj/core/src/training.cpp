// SPDX-License-Identifier: Apache-2.0

#include "ica/training.hpp"

#include <algorithm>

#include "ica/evidence.hpp"
#include "ica/rng.hpp"

namespace ica {

std::string_view to_string(Algo algo) {
  return algo == Algo::kGrpo ? "grpo" : "ica";
}

std::optional<Algo> parse_algo(std::string_view name) {
  if (name == "grpo") return Algo::kGrpo;
  if (name == "ica") return Algo::kIca;
  return std::nullopt;
}

TrainResult train(const WorldSpec& world, Algo algo, const UpdateConfig& cfg,
                  const CreditConfig& credit_cfg,
                  const SoftmaxPolicy& initial) {
  cfg.validate();
  CreditConfig ccfg = credit_cfg;
  if (algo == Algo::kGrpo) ccfg.lambda_weight = 0.0;
  ccfg.validate();

  TrainResult result{{}, initial};
  for (int step = 1; step <= cfg.steps; ++step) {
    const SoftmaxPolicy& behaviour = result.policy;
    std::vector<TrainingGroup> batch;
    long episodes = 0, successes = 0;
    for (std::size_t qi = 0; qi < world.queries.size(); ++qi) {
      const std::uint64_t seed = derive_seed(
          cfg.seed, {static_cast<std::uint64_t>(step), qi});
      TracedGroup traced =
          rollout_group_traced(world, world.queries[qi].query_id, behaviour,
                               cfg.group_size, seed);
      for (const auto& t : traced.group.trajectories) {
        ++episodes;
        successes += t.outcome;
      }
      if (dynamic_sampling_filter({traced.group}, cfg.dynamic_sampling)
              .empty()) {
        continue;
      }
      const AcquisitionIndex index = build_index(traced.group);
      AdvantageTable table = compute_advantage_table(traced.group, index, ccfg);
      batch.push_back(TrainingGroup{std::move(traced.group), std::move(table),
                                    std::move(traced.decisions)});
    }

    TrainStep metrics;
    metrics.step = step;
    metrics.success_rate =
        episodes == 0 ? 0.0
                      : static_cast<double>(successes) /
                            static_cast<double>(episodes);
    if (!batch.empty()) {
      StepResult update = policy_gradient_step(result.policy, batch, cfg);
      result.policy = std::move(update.policy);
      metrics.objective = update.metrics.objective;
      metrics.clip_fraction = update.metrics.clip_fraction;
      metrics.mean_abs_advantage = update.metrics.mean_abs_advantage;
      metrics.mean_ratio = update.metrics.mean_ratio;
    }
    result.series.push_back(metrics);
  }
  return result;
}

double final_success_rate(const std::vector<TrainStep>& series, int window) {
  if (series.empty()) return 0.0;
  const std::size_t w = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::max(window, 1)), 1, series.size());
  double sum = 0.0;
  for (std::size_t i = series.size() - w; i < series.size(); ++i) {
    sum += series[i].success_rate;
  }
  return sum / static_cast<double>(w);
}

int steps_to_half_max(const std::vector<TrainStep>& series, double target,
                      int smoothing) {
  const std::size_t w = static_cast<std::size_t>(std::max(smoothing, 1));
  double window_sum = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    window_sum += series[i].success_rate;
    if (i >= w) window_sum -= series[i - w].success_rate;
    const double mean =
        window_sum / static_cast<double>(std::min(i + 1, w));
    if (mean >= 0.5 * target) return static_cast<int>(i) + 1;
  }
  return static_cast<int>(series.size()) + 1;
}

double mean_clip_fraction(const std::vector<TrainStep>& series) {
  if (series.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : series) sum += s.clip_fraction;
  return sum / static_cast<double>(series.size());
}

}  // namespace ica
