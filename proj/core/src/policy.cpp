// SPDX-License-Identifier: Apache-2.0

#include "ica/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "ica/error.hpp"

namespace ica {

void ClipBounds::validate() const {
  if (!(low > 0.0 && low < 1.0 && high > 1.0)) {
    throw Error(ErrorCode::kPreconditionFailed,
                "clip bounds must satisfy 0 < low < 1 < high");
  }
}

double clipped_surrogate(double ratio, double advantage,
                         const ClipBounds& clip) {
  if (!(ratio > 0.0)) {
    throw Error(ErrorCode::kNonpositiveRatio, std::to_string(ratio));
  }
  const double clamped = std::clamp(ratio, clip.low, clip.high);
  return std::min(ratio * advantage, clamped * advantage);
}

double clipped_surrogate_grad(double ratio, double advantage,
                              const ClipBounds& clip) {
  if (!(ratio > 0.0)) {
    throw Error(ErrorCode::kNonpositiveRatio, std::to_string(ratio));
  }
  const double clamped = std::clamp(ratio, clip.low, clip.high);
  if (clamped == ratio) return advantage;
  return ratio * advantage <= clamped * advantage ? advantage : 0.0;
}

double batch_objective(std::span<const RatioAdvantage> per_token,
                       std::size_t token_total, const ClipBounds& clip) {
  if (per_token.empty() || token_total == 0) {
    throw Error(ErrorCode::kEmptyBatch, "no tokens");
  }
  if (token_total != per_token.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "token_total " + std::to_string(token_total) + " != " +
                    std::to_string(per_token.size()));
  }
  double sum = 0.0;
  for (const auto& t : per_token) {
    sum += clipped_surrogate(t.ratio, t.advantage, clip);
  }
  return sum / static_cast<double>(token_total);
}

SoftmaxPolicy::SoftmaxPolicy(double temperature) : temperature_(temperature) {
  if (!(temperature > 0.0)) {
    throw Error(ErrorCode::kPreconditionFailed, "temperature must be > 0");
  }
}

double SoftmaxPolicy::preference(const std::string& state,
                                 const std::string& action) const {
  const auto s = theta_.find(state);
  if (s == theta_.end()) return 0.0;
  const auto a = s->second.find(action);
  return a == s->second.end() ? 0.0 : a->second;
}

void SoftmaxPolicy::set_preference(const std::string& state,
                                   const std::string& action, double value) {
  theta_[state][action] = value;
}

std::vector<double> SoftmaxPolicy::probabilities(
    const std::string& state, std::span<const std::string> legal) const {
  if (legal.empty()) {
    throw Error(ErrorCode::kPreconditionFailed, "no legal actions at " + state);
  }
  std::vector<double> logits;
  logits.reserve(legal.size());
  for (const auto& a : legal) {
    logits.push_back(preference(state, a) / temperature_);
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double& l : logits) {
    l = std::exp(l - top);
    z += l;
  }
  for (double& l : logits) l /= z;
  return logits;
}

double SoftmaxPolicy::log_prob(const std::string& state,
                               std::span<const std::string> legal,
                               const std::string& action) const {
  double top = -std::numeric_limits<double>::infinity();
  bool found = false;
  for (const auto& a : legal) {
    top = std::max(top, preference(state, a) / temperature_);
    found = found || a == action;
  }
  if (!found) {
    throw Error(ErrorCode::kPreconditionFailed,
                "action " + action + " not legal at " + state);
  }
  double z = 0.0;
  for (const auto& a : legal) {
    z += std::exp(preference(state, a) / temperature_ - top);
  }
  return preference(state, action) / temperature_ - top - std::log(z);
}

std::string SoftmaxPolicy::choose(const Decision& context, Rng& rng) const {
  const std::vector<double> p = probabilities(context.state, context.legal);
  const double u = rng.uniform();
  double cumulative = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    cumulative += p[i];
    if (u < cumulative) return context.legal[i];
  }
  return context.legal.back();
}

std::size_t SoftmaxPolicy::num_parameters() const {
  std::size_t n = 0;
  for (const auto& [_, actions] : theta_) n += actions.size();
  return n;
}

std::string SoftmaxPolicy::to_json() const {
  nlohmann::json j = {{"temperature", temperature_}, {"theta", theta_}};
  return j.dump(2);
}

SoftmaxPolicy SoftmaxPolicy::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    SoftmaxPolicy p(j.at("temperature").get<double>());
    p.theta_ = j.at("theta")
                   .get<std::map<std::string, std::map<std::string, double>>>();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, std::string("policy: ") + e.what());
  }
}

void UpdateConfig::validate() const {
  clip.validate();
  if (!(learning_rate > 0.0)) {
    throw Error(ErrorCode::kPreconditionFailed, "learning rate must be > 0");
  }
  if (group_size < 2) {
    throw Error(ErrorCode::kPreconditionFailed, "group size must be >= 2");
  }
  if (steps < 0 || epochs < 1) {
    throw Error(ErrorCode::kPreconditionFailed, "steps >= 0, epochs >= 1");
  }
}

std::vector<RolloutGroup> dynamic_sampling_filter(
    std::vector<RolloutGroup> groups, bool enabled) {
  if (!enabled) return groups;
  std::erase_if(groups, [](const RolloutGroup& g) {
    if (g.trajectories.empty()) return true;
    const int first = g.trajectories.front().outcome;
    return std::all_of(
        g.trajectories.begin(), g.trajectories.end(),
        [first](const Trajectory& t) { return t.outcome == first; });
  });
  return groups;
}

ObjectiveEvaluation evaluate_objective(const SoftmaxPolicy& policy,
                                       const SoftmaxPolicy& old_policy,
                                       const std::vector<TrainingGroup>& batch,
                                       const ClipBounds& clip) {
  ObjectiveEvaluation eval;
  double weighted_surrogate = 0.0;
  double weighted_ratio = 0.0;
  double weighted_abs_adv = 0.0;
  std::uint64_t clipped_tokens = 0;

  for (const auto& item : batch) {
    const auto& trajectories = item.group.trajectories;
    if (item.decisions.size() != trajectories.size()) {
      throw Error(ErrorCode::kShapeMismatch,
                  item.group.query_id + ": decision lists do not match");
    }
    for (std::size_t n = 0; n < trajectories.size(); ++n) {
      const Trajectory& t = trajectories[n];
      if (item.decisions[n].size() != t.turns.size()) {
        throw Error(ErrorCode::kShapeMismatch,
                    t.trajectory_id + ": decisions do not cover every turn");
      }
      for (std::size_t i = 0; i < t.turns.size(); ++i) {
        const Turn& turn = t.turns[i];
        const TurnAdvantage* row = item.table.find(t.trajectory_id, turn.index);
        if (row == nullptr) {
          throw Error(ErrorCode::kShapeMismatch,
                      t.trajectory_id + " turn " + std::to_string(turn.index) +
                          " missing from advantage table");
        }
        const Decision& d = item.decisions[n][i];
        const double tokens = static_cast<double>(turn.generated_token_count);
        const double adv = row->mixed_advantage;
        const double ratio =
            std::exp(policy.log_prob(d.state, d.legal, d.action) -
                     old_policy.log_prob(d.state, d.legal, d.action));

        eval.token_total += turn.generated_token_count;
        weighted_surrogate += tokens * clipped_surrogate(ratio, adv, clip);
        weighted_ratio += tokens * ratio;
        weighted_abs_adv += tokens * std::abs(adv);
        const double dl = clipped_surrogate_grad(ratio, adv, clip);
        if (dl == 0.0 && adv != 0.0) clipped_tokens += turn.generated_token_count;
        if (dl == 0.0 || tokens == 0.0) continue;

        // d ratio / d theta(s, b) = ratio * (1[b == a] - p(b|s)) / temperature
        const std::vector<double> p = policy.probabilities(d.state, d.legal);
        auto& g = eval.gradient[d.state];
        for (std::size_t b = 0; b < d.legal.size(); ++b) {
          const double indicator = d.legal[b] == d.action ? 1.0 : 0.0;
          g[d.legal[b]] += tokens * dl * ratio * (indicator - p[b]) /
                           policy.temperature();
        }
      }
    }
  }
  if (eval.token_total == 0) throw Error(ErrorCode::kEmptyBatch, "no tokens");
  const double total = static_cast<double>(eval.token_total);
  eval.objective = weighted_surrogate / total;
  eval.mean_ratio = weighted_ratio / total;
  eval.mean_abs_advantage = weighted_abs_adv / total;
  eval.clip_fraction = static_cast<double>(clipped_tokens) / total;
  for (auto& [_, actions] : eval.gradient) {
    for (auto& [_, v] : actions) v /= total;
  }
  return eval;
}

StepResult policy_gradient_step(const SoftmaxPolicy& policy,
                                const std::vector<TrainingGroup>& batch,
                                const UpdateConfig& cfg) {
  cfg.validate();
  const SoftmaxPolicy& old_policy = policy;
  StepResult result{policy, {}};
  double clip_sum = 0.0;
  double ratio_sum = 0.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const ObjectiveEvaluation eval =
        evaluate_objective(result.policy, old_policy, batch, cfg.clip);
    if (epoch == 0) {
      result.metrics.objective = eval.objective;
      result.metrics.mean_abs_advantage = eval.mean_abs_advantage;
    }
    clip_sum += eval.clip_fraction;
    ratio_sum += eval.mean_ratio;
    for (const auto& [state, actions] : eval.gradient) {
      for (const auto& [action, g] : actions) {
        if (g == 0.0) continue;
        result.policy.set_preference(
            state, action,
            result.policy.preference(state, action) + cfg.learning_rate * g);
      }
    }
  }
  result.metrics.clip_fraction = clip_sum / cfg.epochs;
  result.metrics.mean_ratio = ratio_sum / cfg.epochs;
  return result;
}

}  // namespace ica
