// SPDX-License-Identifier: Apache-2.0

#include "ica/planner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ica/error.hpp"

namespace ica {

SlicePlan slice_plan(std::int64_t page_height, const SliceGeometry& g) {
  if (page_height <= 0 || g.slice_height <= 0 || g.cap <= 0 ||
      g.overlap < 0 || g.overlap >= g.slice_height || !(g.scale > 0.0)) {
    throw Error(ErrorCode::kBadGeometry,
                "height=" + std::to_string(page_height) +
                    " slice=" + std::to_string(g.slice_height) +
                    " overlap=" + std::to_string(g.overlap));
  }
  SlicePlan plan;
  plan.scale_factor = g.scale;
  plan.effective_height = std::min(page_height, g.cap);
  plan.truncated = page_height > g.cap;
  const std::int64_t step = g.slice_height - g.overlap;
  for (std::int64_t start = 0; start < plan.effective_height; start += step) {
    const std::int64_t end =
        std::min(start + g.slice_height, plan.effective_height);
    plan.slices.push_back({start, end});
    if (end == plan.effective_height) break;
  }
  return plan;
}

std::int64_t scaled_height(const Slice& slice, double scale) {
  return static_cast<std::int64_t>(
      std::llround(static_cast<double>(slice.height()) * scale));
}

ChunkPlan chunk_merge(std::span<const std::int64_t> lengths,
                      std::int64_t base) {
  ChunkPlan plan;
  Chunk current;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (lengths[i] <= 0) {
      throw Error(ErrorCode::kPreconditionFailed,
                  "segment " + std::to_string(i) + " has non-positive length");
    }
    if (!current.members.empty() && current.total_tokens + lengths[i] > base) {
      plan.chunks.push_back(std::move(current));
      current = Chunk{};
    }
    current.members.push_back(i);
    current.total_tokens += lengths[i];
  }
  if (!current.members.empty()) plan.chunks.push_back(std::move(current));
  return plan;
}

ChunkPlan select_and_truncate(ChunkPlan plan, std::span<const double> scores,
                              std::size_t k, std::int64_t budget) {
  if (scores.size() != plan.chunks.size()) {
    throw Error(ErrorCode::kScoreLengthMismatch,
                std::to_string(scores.size()) + " scores for " +
                    std::to_string(plan.chunks.size()) + " chunks");
  }
  std::vector<std::size_t> order(plan.chunks.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return scores[a] > scores[b];
                   });
  if (order.size() > k) order.resize(k);

  plan.selected.clear();
  plan.selected_tokens.clear();
  std::int64_t used = 0;
  for (std::size_t idx : order) {
    const std::int64_t remaining = budget - used;
    if (remaining <= 0) break;
    const std::int64_t take = std::min(plan.chunks[idx].total_tokens, remaining);
    plan.selected.push_back(idx);
    plan.selected_tokens.push_back(take);
    used += take;
  }
  plan.final_token_count = used;
  return plan;
}

BudgetReport token_budget_report(std::span<const std::int64_t> snapshot_costs,
                                 std::span<const std::int64_t> text_costs) {
  if (snapshot_costs.empty() || text_costs.empty()) {
    throw Error(ErrorCode::kEmptyInput, "no cost pairs");
  }
  if (snapshot_costs.size() != text_costs.size()) {
    throw Error(ErrorCode::kPreconditionFailed, "cost lists differ in length");
  }
  BudgetReport report;
  std::int64_t snap_total = 0, text_total = 0;
  for (std::size_t i = 0; i < text_costs.size(); ++i) {
    if (text_costs[i] <= 0) {
      throw Error(ErrorCode::kNonpositiveTextCost, "pair " + std::to_string(i));
    }
    const double text = static_cast<double>(text_costs[i]);
    report.per_pair.push_back((text - static_cast<double>(snapshot_costs[i])) /
                              text);
    snap_total += snapshot_costs[i];
    text_total += text_costs[i];
  }
  report.aggregate = static_cast<double>(text_total - snap_total) /
                     static_cast<double>(text_total);
  report.mean = std::accumulate(report.per_pair.begin(), report.per_pair.end(),
                                0.0) /
                static_cast<double>(report.per_pair.size());
  return report;
}

}  // namespace ica
