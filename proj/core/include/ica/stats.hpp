// SPDX-License-Identifier: Apache-2.0

#ifndef ICA_STATS_HPP_
#define ICA_STATS_HPP_

#include <cstddef>
#include <span>

namespace ica {

struct PopulationStats {
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population (divide by count)
};

// Sums run over sorted copies, so the result depends only on the multiset of
// values and never on input order.
PopulationStats population_stats(std::span<const double> values);

}  // namespace ica

#endif  // ICA_STATS_HPP_
