#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "forestseg/types.hpp"

namespace forestseg {

using Point3 = std::array<double, 3>;

/// Static kd-tree over a cloud's coordinates.
///
/// Queries are exact: a radius query returns precisely the points with
/// Euclidean distance <= r, and all ties are broken by smallest original
/// point index, so results are independent of tree layout and thread
/// schedule. Read-only after construction; safe to share across threads.
class SpatialIndex {
 public:
  struct Neighbor {
    double dist2 = 0.0;
    std::size_t index = 0;  // original point index

    friend bool operator<(const Neighbor& a, const Neighbor& b) {
      return a.dist2 != b.dist2 ? a.dist2 < b.dist2 : a.index < b.index;
    }
  };

  explicit SpatialIndex(std::vector<Point3> points);

  static SpatialIndex build(const ChannelCloud& cloud);
  static SpatialIndex build(const MultispectralCloud& cloud);

  std::size_t size() const { return pts_.size(); }
  const Point3& point(std::size_t original_index) const {
    return pts_[pos_of_[original_index]];
  }

  /// Indices of all points with distance <= r, ascending by index.
  std::vector<std::size_t> radius_query(const Point3& q, double r) const;

  /// Appends to `out` instead of allocating (hot path for per-point loops).
  void radius_query(const Point3& q, double r, std::vector<std::size_t>& out) const;

  /// Single nearest neighbor with distance <= r, smallest index on ties.
  std::optional<Neighbor> nearest_within(const Point3& q, double r) const;

  /// k nearest neighbors ordered by (distance, index), optionally excluding
  /// one point (used to drop the query point itself). Returns fewer than k
  /// when the cloud is smaller.
  std::vector<Neighbor> knn(const Point3& q, std::size_t k,
                            std::optional<std::size_t> exclude = std::nullopt) const;

 private:
  struct Node {
    double split = 0.0;
    std::int32_t axis = -1;       // -1 marks a leaf
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint32_t begin = 0;      // leaf range into pts_/ids_
    std::uint32_t end = 0;
  };

  std::int32_t build_node(std::uint32_t lo, std::uint32_t hi);

  template <typename Visit>
  void walk_radius(std::int32_t node, const Point3& q, double r2, Visit&& visit) const;

  std::vector<Node> nodes_;
  std::vector<Point3> pts_;          // permuted into tree order
  std::vector<std::uint32_t> ids_;   // tree position -> original index
  std::vector<std::uint32_t> pos_of_;  // original index -> tree position
  std::int32_t root_ = -1;
};

}  // namespace forestseg
