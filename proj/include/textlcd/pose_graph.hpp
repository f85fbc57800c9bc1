#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "textlcd/loop_closure.hpp"

namespace textlcd {

struct PoseGraphEdge {
  std::size_t i = 0;
  std::size_t j = 0;
  Pose measurement;  // expected T_i^-1 * T_j
  Mat6 information = Mat6::Identity();
  bool loop = false;
};

struct OptimizerParams {
  int max_iterations = 100;
  double relative_cost_tolerance = 1e-9;
  double step_tolerance = 1e-8;
  double initial_lambda = 1e-4;
  bool robust_loops = false;
  double huber_delta = 1.0;
};

struct OptimizationResult {
  std::vector<Pose> nodes;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
};

/// Relative pose residual log(Z^-1 T_i^-1 T_j) and its Jacobians with
/// respect to right perturbations T <- T exp(delta).
struct EdgeLinearization {
  Vec6 residual;
  Mat6 jacobian_i;
  Mat6 jacobian_j;
};

EdgeLinearization linearize_edge(const Pose& t_i, const Pose& t_j, const Pose& measurement);

class PoseGraph {
 public:
  PoseGraph() = default;
  explicit PoseGraph(std::vector<Pose> nodes) : nodes_(std::move(nodes)) {}

  /// Chain of odometry edges between consecutive frames.
  static PoseGraph from_odometry(std::span<const Pose> odometry, double sigma_t = 0.005,
                                 double sigma_r = 1e-4);

  void add_edge(PoseGraphEdge edge);
  void add_loop(const LoopConstraint& c);

  const std::vector<Pose>& nodes() const { return nodes_; }
  const std::vector<PoseGraphEdge>& edges() const { return edges_; }

  /// Sum over edges of r^T Lambda r (Huber-weighted on loops when enabled).
  double cost(const std::vector<Pose>& nodes, const OptimizerParams& params = {}) const;

  /// Levenberg-Marquardt with node 0 held fixed.
  OptimizationResult optimize(const OptimizerParams& params = {}) const;

 private:
  std::vector<Pose> nodes_;
  std::vector<PoseGraphEdge> edges_;
};

}  // namespace textlcd
