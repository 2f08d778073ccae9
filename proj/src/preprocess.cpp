#include "forestseg/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

#include "forestseg/error.hpp"
#include "forestseg/spatial_index.hpp"
#include "forestseg/stats.hpp"

namespace forestseg {
namespace {

/// Mean distance to the k nearest neighbors of every point (self excluded).
/// Parallel over points; each point's result is independent.
std::vector<double> mean_knn_distances(const SpatialIndex& index, int k) {
  const auto n = index.size();
  std::vector<double> mean_dist(n, 0.0);
#pragma omp parallel for schedule(dynamic, 256)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    const auto neighbors =
        index.knn(index.point(i), static_cast<std::size_t>(k), static_cast<std::size_t>(i));
    double sum = 0.0;
    for (const auto& nb : neighbors) sum += std::sqrt(nb.dist2);
    mean_dist[i] = sum / static_cast<double>(neighbors.size());
  }
  return mean_dist;
}

std::vector<bool> sor_survivors(const std::vector<double>& mean_dist,
                                double sigma_multiplier) {
  const double mu = mean(mean_dist);
  const double sigma = stddev(mean_dist, mu);
  const double cutoff = mu + sigma_multiplier * sigma;
  std::vector<bool> keep(mean_dist.size());
  for (std::size_t i = 0; i < mean_dist.size(); ++i) keep[i] = mean_dist[i] <= cutoff;
  return keep;
}

template <typename CloudT>
SorResult<CloudT> sor_filter_impl(const CloudT& cloud, const SorParams& params,
                                  const SpatialIndex& index) {
  if (params.k_neighbors < 1) throw ValidationError("SOR k_neighbors must be >= 1");
  if (!(params.sigma_multiplier > 0.0)) {
    throw ValidationError("SOR sigma_multiplier must be > 0");
  }
  if (cloud.points.size() <= static_cast<std::size_t>(params.k_neighbors)) {
    throw ValidationError("SOR requires more than k_neighbors (" +
                          std::to_string(params.k_neighbors) + ") points, got " +
                          std::to_string(cloud.points.size()));
  }
  const auto mean_dist = mean_knn_distances(index, params.k_neighbors);
  const auto keep = sor_survivors(mean_dist, params.sigma_multiplier);

  SorResult<CloudT> result;
  result.filtered = cloud;
  result.filtered.points.clear();
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    if (keep[i]) {
      result.filtered.points.push_back(cloud.points[i]);
    } else {
      result.removed.push_back(i);
    }
  }
  return result;
}

}  // namespace

SorResult<ChannelCloud> sor_filter(const ChannelCloud& cloud, const SorParams& params) {
  return sor_filter_impl(cloud, params, SpatialIndex::build(cloud));
}

SorResult<MultispectralCloud> sor_filter(const MultispectralCloud& cloud,
                                         const SorParams& params) {
  return sor_filter_impl(cloud, params, SpatialIndex::build(cloud));
}

MultispectralCloud merge_channels(const ChannelCloud& swir, const ChannelCloud& nir,
                                  const ChannelCloud& green, const MergeParams& params) {
  if (params.neighbors != 1) throw ValidationError("merge neighbor count is fixed at 1");
  if (!(params.radius_m > 0.0)) throw ValidationError("merge radius must be > 0");
  const ChannelCloud* inputs[3] = {&swir, &nir, &green};
  for (std::size_t c = 0; c < 3; ++c) {
    if (inputs[c]->points.empty()) {
      throw ValidationError(std::string("merge input '") +
                            channel_name(static_cast<Channel>(c)) + "' is empty");
    }
  }

  const SpatialIndex indices[3] = {SpatialIndex::build(swir), SpatialIndex::build(nir),
                                   SpatialIndex::build(green)};

  struct Candidate {
    Point3 xyz;
    std::optional<SemanticClass> label;
  };
  std::vector<Candidate> candidates;
  candidates.reserve(swir.size() + nir.size() + green.size());
  for (const auto* cloud : inputs) {
    for (const auto& p : cloud->points) candidates.push_back({{p.x, p.y, p.z}, p.label});
  }

  const auto n = candidates.size();
  std::vector<std::uint8_t> complete(n, 0);
  std::vector<std::array<double, 3>> fused_db(n);

#pragma omp parallel for schedule(dynamic, 512)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    std::array<double, 3> db{};
    bool ok = true;
    for (std::size_t c = 0; c < 3; ++c) {
      const auto hit = indices[c].nearest_within(candidates[i].xyz, params.radius_m);
      if (!hit) {
        ok = false;
        break;
      }
      db[c] = inputs[c]->points[hit->index].reflectance_db;
    }
    if (ok) {
      complete[i] = 1;
      fused_db[i] = db;
    }
  }

  MultispectralCloud out;
  out.provenance = "merge radius_m=" + std::to_string(params.radius_m) +
                   " inputs=" + std::to_string(swir.size()) + "/" +
                   std::to_string(nir.size()) + "/" + std::to_string(green.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (!complete[i]) continue;
    MultispectralPoint p;
    p.x = candidates[i].xyz[0];
    p.y = candidates[i].xyz[1];
    p.z = candidates[i].xyz[2];
    p.reflectance_db = fused_db[i];
    p.label = candidates[i].label;
    out.points.push_back(p);
  }
  return out;
}

MultispectralCloud normalize_height(const MultispectralCloud& cloud,
                                    const HeightNormParams& params) {
  if (cloud.points.empty()) throw ValidationError("normalize_height on empty cloud");
  if (!(params.cell_size_m > 0.0) || !std::isfinite(params.cell_size_m)) {
    throw ValidationError("cell_size_m must be finite and > 0");
  }

  double min_x = cloud.points.front().x;
  double min_y = cloud.points.front().y;
  for (const auto& p : cloud.points) {
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
  }

  struct Cell {
    std::uint32_t count = 0;
    double min_z = std::numeric_limits<double>::infinity();
  };
  auto key_of = [&](const MultispectralPoint& p) {
    const auto ix = static_cast<std::int64_t>(std::floor((p.x - min_x) / params.cell_size_m));
    const auto iy = static_cast<std::int64_t>(std::floor((p.y - min_y) / params.cell_size_m));
    return std::pair<std::int64_t, std::int64_t>{ix, iy};
  };
  auto pack = [](std::int64_t ix, std::int64_t iy) {
    return (static_cast<std::uint64_t>(ix) << 32) ^ static_cast<std::uint64_t>(iy & 0xffffffff);
  };

  std::unordered_map<std::uint64_t, Cell> grid;
  grid.reserve(cloud.points.size() / 4 + 8);
  for (const auto& p : cloud.points) {
    const auto [ix, iy] = key_of(p);
    Cell& cell = grid[pack(ix, iy)];
    cell.count++;
    cell.min_z = std::min(cell.min_z, p.z);
  }

  MultispectralCloud out = cloud;
  std::vector<double> provisional(cloud.points.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(cloud.points.size()); ++i) {
    const auto& p = cloud.points[i];
    const auto [ix, iy] = key_of(p);
    const Cell& own = grid.at(pack(ix, iy));
    double local_min = own.min_z;
    if (own.count < 3) {
      for (std::int64_t dx = -1; dx <= 1; ++dx) {
        for (std::int64_t dy = -1; dy <= 1; ++dy) {
          const auto it = grid.find(pack(ix + dx, iy + dy));
          if (it != grid.end()) local_min = std::min(local_min, it->second.min_z);
        }
      }
    }
    provisional[i] = p.z - local_min;
  }

  double global_min = provisional[0];
  for (double h : provisional) global_min = std::min(global_min, h);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(out.points.size()); ++i) {
    out.points[i].z_normalized = provisional[i] - global_min;
  }
  return out;
}

MultispectralCloud center_planimetric(const MultispectralCloud& cloud) {
  if (cloud.points.empty()) throw ValidationError("center_planimetric on empty cloud");
  double sum_x = 0.0, sum_y = 0.0;
  for (const auto& p : cloud.points) {
    sum_x += p.x;
    sum_y += p.y;
  }
  const double mean_x = sum_x / static_cast<double>(cloud.points.size());
  const double mean_y = sum_y / static_cast<double>(cloud.points.size());

  MultispectralCloud out = cloud;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(out.points.size()); ++i) {
    out.points[i].x -= mean_x;
    out.points[i].y -= mean_y;
  }
  return out;
}

std::vector<double> robust_minmax_scale(const std::vector<double>& values) {
  if (values.empty()) throw ValidationError("robust_minmax_scale on empty sequence");
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const double med = quantile_sorted(sorted, 0.5);
  const double iqr = iqr_sorted(sorted);

  std::vector<double> scaled(values.size());
  if (iqr > 0.0) {
    for (std::size_t i = 0; i < values.size(); ++i) scaled[i] = (values[i] - med) / iqr;
  } else {
    scaled = values;
  }
  const auto [mn_it, mx_it] = std::minmax_element(scaled.begin(), scaled.end());
  const double mn = *mn_it, mx = *mx_it;
  if (mx > mn) {
    const double range = mx - mn;
    for (double& v : scaled) v = (v - mn) / range;
  } else {
    std::fill(scaled.begin(), scaled.end(), 0.5);
  }
  return scaled;
}

}  // namespace forestseg
