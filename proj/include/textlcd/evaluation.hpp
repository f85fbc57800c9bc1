#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "textlcd/geometry.hpp"

namespace textlcd {

struct LoopGroundTruth {
  double tau = 1.0;
  double s_min = 10.0;
  std::vector<std::vector<std::size_t>> neighbors;  // N_k, ascending
  std::vector<bool> is_loop_pose;

  /// p in N_k.
  bool contains(std::size_t k, std::size_t p) const;
  std::size_t loop_pose_count() const;
};

/// N_k = {p < k : |pos_k - pos_p| < tau and path length p..k > s_min}.
LoopGroundTruth label_loop_poses(std::span<const Pose> gt, double tau, double s_min = 10.0);

struct LoopScore {
  std::optional<double> recall;
  std::optional<double> precision;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

/// Per-pose accounting of predicted (k, p) loop pairs.
LoopScore score(std::span<const std::pair<std::size_t, std::size_t>> predictions,
                const LoopGroundTruth& labels);

struct AteResult {
  double mean = 0.0;
  std::vector<double> per_pose;
};

/// Rigid (no scale) alignment of est onto gt, then per-pose translation error.
AteResult ate(std::span<const Pose> est, std::span<const Pose> gt);

}  // namespace textlcd
