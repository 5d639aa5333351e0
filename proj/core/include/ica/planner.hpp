// SPDX-License-Identifier: Apache-2.0

#ifndef ICA_PLANNER_HPP_
#define ICA_PLANNER_HPP_

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace ica {

// Page snapshot slicing.

struct SliceGeometry {
  std::int64_t slice_height = 4480;
  std::int64_t overlap = 112;
  std::int64_t cap = 20000;  // maximum rendered height
  double scale = 0.7;        // per-slice downsample factor
};

struct Slice {
  std::int64_t y_start = 0;
  std::int64_t y_end = 0;
  std::int64_t height() const { return y_end - y_start; }
  friend bool operator==(const Slice&, const Slice&) = default;
};

struct SlicePlan {
  std::vector<Slice> slices;
  double scale_factor = 1.0;
  std::int64_t effective_height = 0;
  bool truncated = false;
};

/// Sliding windows of `slice_height` stepping by slice_height - overlap over
/// min(page_height, cap). Throws Error(kBadGeometry) when overlap >=
/// slice_height or a dimension is non-positive.
SlicePlan slice_plan(std::int64_t page_height, const SliceGeometry& geometry = {});

/// Output pixel height of a slice after downsampling, rounded to nearest.
std::int64_t scaled_height(const Slice& slice, double scale);

// Text chunking for retrieval.

struct Chunk {
  std::vector<std::size_t> members;  // indices into the input segments
  std::int64_t total_tokens = 0;
};

struct ChunkPlan {
  std::vector<Chunk> chunks;
  std::vector<std::size_t> selected;         // chunk indices, rank order
  std::vector<std::int64_t> selected_tokens; // tokens kept per selected chunk
  std::int64_t final_token_count = 0;
};

inline constexpr std::int64_t kBaseChunkTokens = 256;
inline constexpr std::size_t kTopK = 10;
inline constexpr std::int64_t kContextBudget = 2048;

/// Greedy left-to-right merge of adjacent segments while the running total
/// stays within `base`; an oversize segment becomes its own chunk.
ChunkPlan chunk_merge(std::span<const std::int64_t> segment_token_lengths,
                      std::int64_t base = kBaseChunkTokens);

/// Keeps the top `k` chunks by score (ties to the lower index) and truncates
/// the concatenation to `budget` tokens, cutting the last chunk mid-way.
ChunkPlan select_and_truncate(ChunkPlan plan, std::span<const double> scores,
                              std::size_t k = kTopK,
                              std::int64_t budget = kContextBudget);

struct BudgetReport {
  std::vector<double> per_pair;  // (text - snapshot) / text
  double aggregate = 0.0;        // over summed costs
  double mean = 0.0;             // of per-pair values
};

BudgetReport token_budget_report(std::span<const std::int64_t> snapshot_costs,
                                 std::span<const std::int64_t> text_costs);

}  // namespace ica

#endif  // ICA_PLANNER_HPP_
