#include "support/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace forestseg::reference {
namespace {

double dist2(const Point3& a, const Point3& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

}  // namespace

std::vector<std::size_t> radius_query_brute(const std::vector<Point3>& pts,
                                            const Point3& q, double r) {
  std::vector<std::size_t> out;
  const double r2 = r * r;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (dist2(pts[i], q) <= r2) out.push_back(i);
  }
  return out;
}

std::vector<SpatialIndex::Neighbor> knn_brute(const std::vector<Point3>& pts,
                                              const Point3& q, std::size_t k,
                                              std::optional<std::size_t> exclude) {
  std::vector<SpatialIndex::Neighbor> all;
  all.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (exclude && i == *exclude) continue;
    all.push_back({dist2(pts[i], q), i});
  }
  std::sort(all.begin(), all.end());
  if (all.size() > k) all.resize(k);
  return all;
}

std::vector<double> mean_knn_distances_brute(const std::vector<Point3>& pts, int k) {
  std::vector<double> out(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto neighbors = knn_brute(pts, pts[i], static_cast<std::size_t>(k), i);
    double sum = 0.0;
    for (const auto& nb : neighbors) sum += std::sqrt(nb.dist2);
    out[i] = sum / static_cast<double>(neighbors.size());
  }
  return out;
}

std::vector<bool> sor_survivors_brute(const std::vector<Point3>& pts, int k,
                                      double sigma_multiplier) {
  const auto mean_dist = mean_knn_distances_brute(pts, k);
  double mu = 0.0;
  for (double d : mean_dist) mu += d;
  mu /= static_cast<double>(mean_dist.size());
  double var = 0.0;
  for (double d : mean_dist) var += (d - mu) * (d - mu);
  const double sigma = std::sqrt(var / static_cast<double>(mean_dist.size()));
  const double cutoff = mu + sigma_multiplier * sigma;

  std::vector<bool> keep(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) keep[i] = mean_dist[i] <= cutoff;
  return keep;
}

MultispectralCloud merge_channels_brute(const ChannelCloud& swir,
                                        const ChannelCloud& nir,
                                        const ChannelCloud& green, double radius_m) {
  const ChannelCloud* inputs[3] = {&swir, &nir, &green};
  const double r2 = radius_m * radius_m;

  MultispectralCloud out;
  for (const auto* source : inputs) {
    for (const auto& cand : source->points) {
      std::array<double, 3> db{};
      bool complete = true;
      for (std::size_t c = 0; c < 3 && complete; ++c) {
        double best_d2 = std::numeric_limits<double>::infinity();
        std::size_t best_idx = 0;
        bool found = false;
        const auto& chan = inputs[c]->points;
        for (std::size_t j = 0; j < chan.size(); ++j) {
          const double dx = chan[j].x - cand.x;
          const double dy = chan[j].y - cand.y;
          const double dz = chan[j].z - cand.z;
          const double d2 = dx * dx + dy * dy + dz * dz;
          if (d2 > r2) continue;
          if (!found || d2 < best_d2 || (d2 == best_d2 && j < best_idx)) {
            best_d2 = d2;
            best_idx = j;
            found = true;
          }
        }
        if (!found) {
          complete = false;
        } else {
          db[c] = chan[best_idx].reflectance_db;
        }
      }
      if (!complete) continue;
      MultispectralPoint p;
      p.x = cand.x;
      p.y = cand.y;
      p.z = cand.z;
      p.reflectance_db = db;
      p.label = cand.label;
      out.points.push_back(p);
    }
  }
  return out;
}

}  // namespace forestseg::reference
