#include "textlcd/evaluation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>

#include <Eigen/Geometry>

#include "textlcd/error.hpp"

namespace textlcd {

namespace {

struct CellHash {
  std::size_t operator()(const std::array<std::int64_t, 3>& c) const {
    std::size_t h = 1469598103934665603ull;
    for (auto v : c) h = (h ^ static_cast<std::size_t>(v)) * 1099511628211ull;
    return h;
  }
};

}  // namespace

bool LoopGroundTruth::contains(std::size_t k, std::size_t p) const {
  if (k >= neighbors.size()) return false;
  return std::binary_search(neighbors[k].begin(), neighbors[k].end(), p);
}

std::size_t LoopGroundTruth::loop_pose_count() const {
  return static_cast<std::size_t>(std::count(is_loop_pose.begin(), is_loop_pose.end(), true));
}

LoopGroundTruth label_loop_poses(std::span<const Pose> gt, double tau, double s_min) {
  LoopGroundTruth out;
  out.tau = tau;
  out.s_min = s_min;
  out.neighbors.resize(gt.size());
  out.is_loop_pose.assign(gt.size(), false);

  std::vector<double> travel(gt.size(), 0.0);
  for (std::size_t k = 1; k < gt.size(); ++k) {
    travel[k] = travel[k - 1] + (gt[k].translation() - gt[k - 1].translation()).norm();
  }

  std::unordered_map<std::array<std::int64_t, 3>, std::vector<std::size_t>, CellHash> grid;
  const auto cell_of = [tau](const Vec3& p) {
    return std::array<std::int64_t, 3>{static_cast<std::int64_t>(std::floor(p.x() / tau)),
                                       static_cast<std::int64_t>(std::floor(p.y() / tau)),
                                       static_cast<std::int64_t>(std::floor(p.z() / tau))};
  };

  for (std::size_t k = 0; k < gt.size(); ++k) {
    const Vec3& pk = gt[k].translation();
    const auto c = cell_of(pk);
    auto& hits = out.neighbors[k];
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          auto it = grid.find({c[0] + dx, c[1] + dy, c[2] + dz});
          if (it == grid.end()) continue;
          for (auto p : it->second) {
            if ((gt[p].translation() - pk).norm() < tau && travel[k] - travel[p] > s_min) {
              hits.push_back(p);
            }
          }
        }
      }
    }
    std::sort(hits.begin(), hits.end());
    out.is_loop_pose[k] = !hits.empty();
    grid[c].push_back(k);
  }
  return out;
}

LoopScore score(std::span<const std::pair<std::size_t, std::size_t>> predictions,
                const LoopGroundTruth& labels) {
  std::vector<std::vector<std::size_t>> reported(labels.is_loop_pose.size());
  for (const auto& [k, p] : predictions) {
    if (k >= reported.size()) {
      throw std::out_of_range("prediction frame " + std::to_string(k) + " outside trajectory");
    }
    reported[k].push_back(p);
  }
  LoopScore s;
  for (std::size_t k = 0; k < reported.size(); ++k) {
    if (reported[k].empty()) {
      if (labels.is_loop_pose[k]) ++s.fn;
      continue;
    }
    const bool hit = std::any_of(reported[k].begin(), reported[k].end(),
                                 [&](std::size_t p) { return labels.contains(k, p); });
    ++(hit ? s.tp : s.fp);
  }
  if (s.tp + s.fn > 0) s.recall = static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fn);
  if (s.tp + s.fp > 0) s.precision = static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp);
  return s;
}

AteResult ate(std::span<const Pose> est, std::span<const Pose> gt) {
  if (est.size() != gt.size()) {
    throw Error(ErrorCode::LengthMismatch, "estimate has " + std::to_string(est.size()) +
                                               " poses, ground truth " + std::to_string(gt.size()));
  }
  AteResult out;
  if (est.empty()) return out;
  const auto n = static_cast<Eigen::Index>(est.size());
  Eigen::Matrix3Xd src(3, n);
  Eigen::Matrix3Xd dst(3, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    src.col(k) = est[static_cast<std::size_t>(k)].translation();
    dst.col(k) = gt[static_cast<std::size_t>(k)].translation();
  }
  Eigen::Matrix4d align = Eigen::Matrix4d::Identity();
  if (n >= 3) align = Eigen::umeyama(src, dst, false);
  else align.topRightCorner<3, 1>() = dst.rowwise().mean() - src.rowwise().mean();
  const Mat3 r = align.topLeftCorner<3, 3>();
  const Vec3 t = align.topRightCorner<3, 1>();
  out.per_pose.resize(est.size());
  double sum = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double e = (r * src.col(k) + t - dst.col(k)).norm();
    out.per_pose[static_cast<std::size_t>(k)] = e;
    sum += e;
  }
  out.mean = sum / static_cast<double>(n);
  return out;
}

}  // namespace textlcd
