#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace forestseg {

/// Counter-based splittable RNG (splitmix64 core).
///
/// Every random draw in the toolkit goes through this generator so that
/// results are reproducible across platforms and thread schedules. Streams
/// are keyed explicitly, e.g. (seed, tree_index) or (seed, point_index),
/// and each keyed stream is independent of how work is scheduled.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix(seed ^ kGolden)) {}

  /// Stream keyed by (seed, stream): deterministic regardless of which
  /// thread consumes it.
  Rng(std::uint64_t seed, std::uint64_t stream)
      : state_(mix(mix(seed ^ kGolden) + mix(stream ^ 0x94d049bb133111ebULL))) {}

  std::uint64_t next_u64() {
    state_ += kGolden;
    return mix(state_);
  }

  /// Uniform in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n). n must be > 0. Multiply-shift mapping;
  /// fully determined by the u64 stream, no rejection loop.
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  /// Uniform in [lo, hi).
  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  /// Standard normal via Box-Muller (one value per call, no caching, so the
  /// draw count per stream is predictable).
  double next_normal() {
    double u1 = next_double();
    double u2 = next_double();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  /// Fisher-Yates shuffle with this generator's stream.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// Derives a child seed; used to give sub-tasks (ablation scenarios,
  /// trees) independent streams from one user-facing seed.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t index) {
    return mix(mix(seed ^ kGolden) + mix(index ^ 0xbf58476d1ce4e5b9ULL));
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace forestseg
