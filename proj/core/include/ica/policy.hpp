// SPDX-License-Identifier: Apache-2.0

#ifndef ICA_POLICY_HPP_
#define ICA_POLICY_HPP_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ica/credit.hpp"
#include "ica/rng.hpp"
#include "ica/trajectory.hpp"

namespace ica {

// Asymmetric ratio clipping.
struct ClipBounds {
  double low = 0.8;
  double high = 1.28;

  void validate() const;
};

/// min(ratio * A, clamp(ratio, low, high) * A). Throws
/// Error(kNonpositiveRatio) for ratio <= 0.
double clipped_surrogate(double ratio, double advantage, const ClipBounds& clip);

/// d/d(ratio) of clipped_surrogate: A where the unclipped branch is active,
/// 0 where the clip holds the value.
double clipped_surrogate_grad(double ratio, double advantage,
                              const ClipBounds& clip);

struct RatioAdvantage {
  double ratio = 1.0;
  double advantage = 0.0;
};

/// Surrogate averaged over all tokens of the batch.
double batch_objective(std::span<const RatioAdvantage> per_token,
                       std::size_t token_total, const ClipBounds& clip);

/// One policy decision as seen by the learner.
struct Decision {
  std::string state;
  std::vector<std::string> legal;  // actions the softmax ranges over
  std::string action;
  int turn = 0;  // 1-based turn the decision was made at
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string choose(const Decision& context, Rng& rng) const = 0;
};

// Tabular softmax over (state, action) preferences; unseen pairs have
// preference 0, so an empty table is the uniform-random policy.
class SoftmaxPolicy : public Policy {
 public:
  explicit SoftmaxPolicy(double temperature = 1.0);

  double temperature() const { return temperature_; }
  double preference(const std::string& state, const std::string& action) const;
  void set_preference(const std::string& state, const std::string& action,
                      double value);

  std::vector<double> probabilities(const std::string& state,
                                    std::span<const std::string> legal) const;
  double log_prob(const std::string& state, std::span<const std::string> legal,
                  const std::string& action) const;

  std::string choose(const Decision& context, Rng& rng) const override;

  const std::map<std::string, std::map<std::string, double>>& table() const {
    return theta_;
  }
  std::size_t num_parameters() const;

  std::string to_json() const;
  static SoftmaxPolicy from_json(const std::string& text);

  friend bool operator==(const SoftmaxPolicy& a, const SoftmaxPolicy& b) {
    return a.temperature_ == b.temperature_ && a.theta_ == b.theta_;
  }

 private:
  std::map<std::string, std::map<std::string, double>> theta_;
  double temperature_;
};

struct UpdateConfig {
  ClipBounds clip;
  double learning_rate = 10.0;
  int group_size = 8;
  int steps = 100;
  bool dynamic_sampling = false;
  std::uint64_t seed = 0;
  int epochs = 1;  // gradient epochs per rollout batch

  void validate() const;
};

// A sampled group together with its advantages and the decision made at
// each turn, in the group's trajectory order.
struct TrainingGroup {
  RolloutGroup group;
  AdvantageTable table;
  std::vector<std::vector<Decision>> decisions;  // [trajectory][turn]
};

/// Drops groups whose outcomes are all 0 or all 1 when `enabled`.
std::vector<RolloutGroup> dynamic_sampling_filter(
    std::vector<RolloutGroup> groups, bool enabled);

using Gradient = std::map<std::string, std::map<std::string, double>>;

struct ObjectiveEvaluation {
  double objective = 0.0;
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
  double mean_abs_advantage = 0.0;
  std::uint64_t token_total = 0;
  Gradient gradient;
};

/// Token-normalized clipped objective of `policy` against the frozen
/// `old_policy`, with its analytic gradient in the preference table.
ObjectiveEvaluation evaluate_objective(const SoftmaxPolicy& policy,
                                       const SoftmaxPolicy& old_policy,
                                       const std::vector<TrainingGroup>& batch,
                                       const ClipBounds& clip);

struct StepMetrics {
  double objective = 0.0;
  double mean_ratio = 1.0;
  double clip_fraction = 0.0;
  double mean_abs_advantage = 0.0;
};

struct StepResult {
  SoftmaxPolicy policy;
  StepMetrics metrics;
};

/// Gradient ascent on the clipped objective, `cfg.epochs` steps against the
/// incoming policy as pi_old. Throws Error(kShapeMismatch) if the tables or
/// decisions do not cover every sampled turn, Error(kEmptyBatch) if no
/// tokens remain.
StepResult policy_gradient_step(const SoftmaxPolicy& policy,
                                const std::vector<TrainingGroup>& batch,
                                const UpdateConfig& cfg);

}  // namespace ica

#endif  // ICA_POLICY_HPP_
