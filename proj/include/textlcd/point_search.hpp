#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "textlcd/geometry.hpp"

namespace textlcd {

/// Static 3-D tree for nearest-neighbour queries.
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(std::span<const Vec3> points);

  struct Neighbor {
    std::size_t index;
    double squared_distance;
  };

  /// Nearest point strictly closer than max_distance.
  std::optional<Neighbor> nearest(const Vec3& query, double max_distance) const;

  std::size_t size() const { return points_.size(); }
  const std::vector<Vec3>& points() const { return points_; }

 private:
  struct Node {
    std::size_t point;
    int axis;
    std::size_t left;
    std::size_t right;
  };
  static constexpr std::size_t kNull = static_cast<std::size_t>(-1);

  std::size_t build(std::vector<std::size_t>& idx, std::size_t lo, std::size_t hi, int depth);
  void search(std::size_t node, const Vec3& q, Neighbor& best) const;

  std::vector<Vec3> points_;
  std::vector<Node> nodes_;
  std::size_t root_ = kNull;
};

/// One centroid per occupied voxel, ordered by first occurrence.
std::vector<Vec3> voxel_downsample(std::span<const Vec3> points, double voxel);

}  // namespace textlcd
