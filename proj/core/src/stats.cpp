// SPDX-License-Identifier: Apache-2.0

#include "ica/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace ica {

namespace {

double sorted_sum(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum;
}

}  // namespace

PopulationStats population_stats(std::span<const double> values) {
  PopulationStats s;
  s.count = values.size();
  if (values.empty()) return s;
  std::vector<double> work(values.begin(), values.end());
  s.mean = sorted_sum(work) / static_cast<double>(s.count);
  for (double& x : work) x = (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(sorted_sum(work) / static_cast<double>(s.count));
  return s;
}

}  // namespace ica
