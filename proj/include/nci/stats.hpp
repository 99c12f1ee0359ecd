#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "nci/error.hpp"

namespace nci {

// Percentile with linear interpolation between order statistics.
// `sorted` must be ascending and nonempty; p in [0, 100].
inline double percentile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) fail(ErrorKind::Parameter, "percentile of empty sample");
  if (sorted.size() == 1) return sorted[0];
  const double pos = (p / 100.0) * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  if (lo == hi || sorted[lo] == sorted[hi]) return sorted[lo];
  // lo + w * (hi - lo) stays inside [sorted[lo], sorted[hi]] under rounding,
  // so interpolating between equal order statistics returns them exactly.
  const double w = pos - static_cast<double>(lo);
  return sorted[lo] + w * (sorted[hi] - sorted[lo]);
}

inline double percentile(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  return percentile_sorted(values, p);
}

inline double mean_of(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

// Population standard deviation.
inline double stddev_of(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  const double m = mean_of(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(xs.size()));
}

}  // namespace nci
