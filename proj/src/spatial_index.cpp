#include "forestseg/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "forestseg/error.hpp"

namespace forestseg {
namespace {

constexpr std::uint32_t kLeafSize = 16;

double dist2(const Point3& a, const Point3& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

}  // namespace

SpatialIndex::SpatialIndex(std::vector<Point3> points) : pts_(std::move(points)) {
  if (pts_.empty()) throw ValidationError("spatial index over empty cloud");
  const auto n = static_cast<std::uint32_t>(pts_.size());
  ids_.resize(n);
  std::iota(ids_.begin(), ids_.end(), 0u);
  nodes_.reserve(2 * (n / kLeafSize + 2));
  root_ = build_node(0, n);

  // Permute coordinates into tree order so leaf scans are contiguous.
  std::vector<Point3> permuted(n);
  pos_of_.resize(n);
  for (std::uint32_t pos = 0; pos < n; ++pos) {
    permuted[pos] = pts_[ids_[pos]];
    pos_of_[ids_[pos]] = pos;
  }
  pts_ = std::move(permuted);
}

SpatialIndex SpatialIndex::build(const ChannelCloud& cloud) {
  std::vector<Point3> pts;
  pts.reserve(cloud.points.size());
  for (const auto& p : cloud.points) pts.push_back({p.x, p.y, p.z});
  return SpatialIndex(std::move(pts));
}

SpatialIndex SpatialIndex::build(const MultispectralCloud& cloud) {
  std::vector<Point3> pts;
  pts.reserve(cloud.points.size());
  for (const auto& p : cloud.points) pts.push_back({p.x, p.y, p.z});
  return SpatialIndex(std::move(pts));
}

std::int32_t SpatialIndex::build_node(std::uint32_t lo, std::uint32_t hi) {
  Node node;
  node.begin = lo;
  node.end = hi;
  if (hi - lo <= kLeafSize) {
    nodes_.push_back(node);
    return static_cast<std::int32_t>(nodes_.size() - 1);
  }

  Point3 mn = pts_[ids_[lo]];
  Point3 mx = mn;
  for (std::uint32_t i = lo + 1; i < hi; ++i) {
    const Point3& p = pts_[ids_[i]];
    for (int a = 0; a < 3; ++a) {
      mn[a] = std::min(mn[a], p[a]);
      mx[a] = std::max(mx[a], p[a]);
    }
  }
  int axis = 0;
  double extent = mx[0] - mn[0];
  for (int a = 1; a < 3; ++a) {
    if (mx[a] - mn[a] > extent) {
      extent = mx[a] - mn[a];
      axis = a;
    }
  }

  const std::uint32_t mid = lo + (hi - lo) / 2;
  std::nth_element(ids_.begin() + lo, ids_.begin() + mid, ids_.begin() + hi,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double va = pts_[a][axis];
                     const double vb = pts_[b][axis];
                     return va != vb ? va < vb : a < b;
                   });
  node.axis = axis;
  node.split = pts_[ids_[mid]][axis];

  const auto self = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(node);
  const std::int32_t left = build_node(lo, mid);
  const std::int32_t right = build_node(mid, hi);
  nodes_[self].left = left;
  nodes_[self].right = right;
  return self;
}

template <typename Visit>
void SpatialIndex::walk_radius(std::int32_t ni, const Point3& q, double r2,
                               Visit&& visit) const {
  const Node& node = nodes_[ni];
  if (node.axis < 0) {
    for (std::uint32_t pos = node.begin; pos < node.end; ++pos) {
      const double d2 = dist2(pts_[pos], q);
      if (d2 <= r2) visit(d2, ids_[pos]);
    }
    return;
  }
  const double delta = q[node.axis] - node.split;
  // Left subtree holds coords <= split, right holds coords >= split.
  if (delta <= 0.0) {
    walk_radius(node.left, q, r2, visit);
    if (delta * delta <= r2) walk_radius(node.right, q, r2, visit);
  } else {
    walk_radius(node.right, q, r2, visit);
    if (delta * delta <= r2) walk_radius(node.left, q, r2, visit);
  }
}

void SpatialIndex::radius_query(const Point3& q, double r,
                                std::vector<std::size_t>& out) const {
  walk_radius(root_, q, r * r, [&](double, std::uint32_t id) { out.push_back(id); });
  std::sort(out.begin(), out.end());
}

std::vector<std::size_t> SpatialIndex::radius_query(const Point3& q, double r) const {
  std::vector<std::size_t> out;
  radius_query(q, r, out);
  return out;
}

std::optional<SpatialIndex::Neighbor> SpatialIndex::nearest_within(const Point3& q,
                                                                   double r) const {
  Neighbor best{r * r, std::numeric_limits<std::size_t>::max()};
  bool found = false;
  // Re-walks with the shrinking best distance; prune on strictly-greater so
  // equal-distance candidates with smaller index are still reached.
  struct Frame {
    std::int32_t node;
  };
  std::vector<Frame> stack;
  stack.push_back({root_});
  while (!stack.empty()) {
    const std::int32_t ni = stack.back().node;
    stack.pop_back();
    const Node& node = nodes_[ni];
    if (node.axis < 0) {
      for (std::uint32_t pos = node.begin; pos < node.end; ++pos) {
        const double d2 = dist2(pts_[pos], q);
        const Neighbor cand{d2, ids_[pos]};
        if (d2 <= best.dist2 && (cand < best || !found)) {
          if (cand < best) best = cand;
          found = true;
        }
      }
      continue;
    }
    const double delta = q[node.axis] - node.split;
    const std::int32_t near = delta <= 0.0 ? node.left : node.right;
    const std::int32_t far = delta <= 0.0 ? node.right : node.left;
    if (delta * delta <= best.dist2) stack.push_back({far});
    stack.push_back({near});
  }
  if (!found) return std::nullopt;
  return best;
}

std::vector<SpatialIndex::Neighbor> SpatialIndex::knn(
    const Point3& q, std::size_t k, std::optional<std::size_t> exclude) const {
  std::vector<Neighbor> heap;  // max-heap on (dist2, index)
  if (k == 0) return heap;
  heap.reserve(k + 1);
  auto cmp = [](const Neighbor& a, const Neighbor& b) { return a < b; };

  auto worst_d2 = [&]() {
    return heap.size() < k ? std::numeric_limits<double>::infinity()
                           : heap.front().dist2;
  };

  std::vector<std::int32_t> stack;
  stack.push_back(root_);
  while (!stack.empty()) {
    const std::int32_t ni = stack.back();
    stack.pop_back();
    const Node& node = nodes_[ni];
    if (node.axis < 0) {
      for (std::uint32_t pos = node.begin; pos < node.end; ++pos) {
        const std::size_t id = ids_[pos];
        if (exclude && id == *exclude) continue;
        const Neighbor cand{dist2(pts_[pos], q), id};
        if (heap.size() < k) {
          heap.push_back(cand);
          std::push_heap(heap.begin(), heap.end(), cmp);
        } else if (cand < heap.front()) {
          std::pop_heap(heap.begin(), heap.end(), cmp);
          heap.back() = cand;
          std::push_heap(heap.begin(), heap.end(), cmp);
        }
      }
      continue;
    }
    const double delta = q[node.axis] - node.split;
    const std::int32_t near = delta <= 0.0 ? node.left : node.right;
    const std::int32_t far = delta <= 0.0 ? node.right : node.left;
    if (delta * delta <= worst_d2()) stack.push_back(far);
    stack.push_back(near);
  }

  std::sort(heap.begin(), heap.end());
  return heap;
}

}  // namespace forestseg
