#include "textlcd/point_search.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <unordered_map>

namespace textlcd {

KdTree::KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
  if (points_.empty()) return;
  std::vector<std::size_t> idx(points_.size());
  std::iota(idx.begin(), idx.end(), 0);
  nodes_.reserve(points_.size());
  root_ = build(idx, 0, idx.size(), 0);
}

std::size_t KdTree::build(std::vector<std::size_t>& idx, std::size_t lo, std::size_t hi,
                          int depth) {
  if (lo >= hi) return kNull;
  const int axis = depth % 3;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::nth_element(idx.begin() + static_cast<std::ptrdiff_t>(lo),
                   idx.begin() + static_cast<std::ptrdiff_t>(mid),
                   idx.begin() + static_cast<std::ptrdiff_t>(hi),
                   [&](std::size_t a, std::size_t b) { return points_[a][axis] < points_[b][axis]; });
  const std::size_t node = nodes_.size();
  nodes_.push_back({idx[mid], axis, kNull, kNull});
  const std::size_t left = build(idx, lo, mid, depth + 1);
  const std::size_t right = build(idx, mid + 1, hi, depth + 1);
  nodes_[node].left = left;
  nodes_[node].right = right;
  return node;
}

void KdTree::search(std::size_t node, const Vec3& q, Neighbor& best) const {
  while (node != kNull) {
    const Node& n = nodes_[node];
    const Vec3& p = points_[n.point];
    const double d2 = (p - q).squaredNorm();
    if (d2 < best.squared_distance) best = {n.point, d2};
    const double diff = q[n.axis] - p[n.axis];
    const std::size_t near = diff < 0.0 ? n.left : n.right;
    const std::size_t far = diff < 0.0 ? n.right : n.left;
    if (far != kNull && diff * diff < best.squared_distance) search(far, q, best);
    node = near;
  }
}

std::optional<KdTree::Neighbor> KdTree::nearest(const Vec3& query, double max_distance) const {
  Neighbor best{kNull, max_distance * max_distance};
  search(root_, query, best);
  if (best.index == kNull) return std::nullopt;
  return best;
}

std::vector<Vec3> voxel_downsample(std::span<const Vec3> points, double voxel) {
  struct Cell {
    Vec3 sum;
    double count;
  };
  using Key = std::array<std::int64_t, 3>;
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      return static_cast<std::size_t>((static_cast<std::uint64_t>(k[0]) * 73856093ULL) ^
                                      (static_cast<std::uint64_t>(k[1]) * 19349663ULL) ^
                                      (static_cast<std::uint64_t>(k[2]) * 83492791ULL));
    }
  };
  std::unordered_map<Key, std::size_t, KeyHash> slot;
  std::vector<Cell> cells;
  for (const auto& p : points) {
    const Key k{static_cast<std::int64_t>(std::floor(p.x() / voxel)),
                static_cast<std::int64_t>(std::floor(p.y() / voxel)),
                static_cast<std::int64_t>(std::floor(p.z() / voxel))};
    auto [it, inserted] = slot.try_emplace(k, cells.size());
    if (inserted) cells.push_back({Vec3::Zero(), 0.0});
    cells[it->second].sum += p;
    cells[it->second].count += 1.0;
  }
  std::vector<Vec3> out;
  out.reserve(cells.size());
  for (const auto& c : cells) out.push_back(c.sum / c.count);
  return out;
}

}  // namespace textlcd
