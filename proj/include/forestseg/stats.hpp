#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "forestseg/error.hpp"

namespace forestseg {

/// Linear-interpolation quantile (the same convention throughout the
/// toolkit). `sorted` must be ascending and non-empty; p in [0, 1].
inline double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw ValidationError("quantile of empty sequence");
  if (sorted.size() == 1) return sorted[0];
  const double h = p * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= sorted.size()) return sorted[sorted.size() - 1];
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline double quantile(std::span<const double> values, double p) {
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, p);
}

inline double median(std::span<const double> values) {
  return quantile(values, 0.5);
}

/// Q75 - Q25.
inline double iqr_sorted(std::span<const double> sorted) {
  return quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
}

struct QuartileSummary {
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
};

inline QuartileSummary quartiles(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  return {quantile_sorted(v, 0.25), quantile_sorted(v, 0.5),
          quantile_sorted(v, 0.75)};
}

/// Mean accumulated in index order (deterministic across thread counts).
inline double mean(std::span<const double> values) {
  if (values.empty()) throw ValidationError("mean of empty sequence");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

/// Population standard deviation, index-order accumulation.
inline double stddev(std::span<const double> values, double mu) {
  double s = 0.0;
  for (double v : values) s += (v - mu) * (v - mu);
  return std::sqrt(s / static_cast<double>(values.size()));
}

}  // namespace forestseg
