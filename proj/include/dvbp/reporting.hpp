// Copyright 2026 The dvbp-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DVBP_REPORTING_HPP
#define DVBP_REPORTING_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "dvbp/engine.hpp"

namespace dvbp {

/// Total usage time over the usage-time lower bound; >= 1 up to rounding.
inline double performance_ratio(const RunReport& report) {
  if (report.lower_bound_us <= 0)
    throw std::invalid_argument("performance_ratio: undefined for an empty lower bound");
  return static_cast<double>(report.total_usage_us) / static_cast<double>(report.lower_bound_us);
}

/// Box-plot summary. Quartiles use linear interpolation between order
/// statistics (the inclusive spreadsheet convention: value at rank
/// (n-1)*p); whiskers reach the farthest data points within 1.5 IQR of the
/// quartiles and everything beyond is an outlier.
struct BoxStats {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
  double mean = 0;
  double whisker_low = 0, whisker_high = 0;
  std::vector<double> outliers;
};

inline BoxStats box_stats(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("box_stats: empty sample");
  std::sort(values.begin(), values.end());
  auto quantile = [&](double p) {
    double rank = p * static_cast<double>(values.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(rank));
    auto hi = static_cast<std::size_t>(std::ceil(rank));
    double frac = rank - std::floor(rank);
    return values[lo] + frac * (values[hi] - values[lo]);
  };

  BoxStats stats;
  stats.min = values.front();
  stats.max = values.back();
  stats.q1 = quantile(0.25);
  stats.median = quantile(0.5);
  stats.q3 = quantile(0.75);
  double sum = 0;
  for (double v : values) sum += v;
  stats.mean = sum / static_cast<double>(values.size());

  double iqr = stats.q3 - stats.q1;
  double lo_fence = stats.q1 - 1.5 * iqr;
  double hi_fence = stats.q3 + 1.5 * iqr;
  stats.whisker_low = stats.max;
  stats.whisker_high = stats.min;
  for (double v : values) {
    if (v >= lo_fence) stats.whisker_low = std::min(stats.whisker_low, v);
    if (v <= hi_fence) stats.whisker_high = std::max(stats.whisker_high, v);
    if (v < lo_fence || v > hi_fence) stats.outliers.push_back(v);
  }
  return stats;
}

/// Ratios print with six significant digits everywhere.
inline std::string format_ratio(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", value);
  return buf;
}

}  // namespace dvbp

#endif  // DVBP_REPORTING_HPP
