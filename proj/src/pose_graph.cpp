#include "textlcd/pose_graph.hpp"

#include <cmath>
#include <string>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

namespace textlcd {

namespace {

using Triplet = Eigen::Triplet<double>;

double robust_weight(double squared, bool loop, const OptimizerParams& p) {
  if (!loop || !p.robust_loops) return 1.0;
  const double norm = std::sqrt(squared);
  return norm <= p.huber_delta ? 1.0 : p.huber_delta / norm;
}

double robust_cost(double squared, bool loop, const OptimizerParams& p) {
  if (!loop || !p.robust_loops) return squared;
  const double norm = std::sqrt(squared);
  if (norm <= p.huber_delta) return squared;
  return 2.0 * p.huber_delta * norm - p.huber_delta * p.huber_delta;
}

}  // namespace

EdgeLinearization linearize_edge(const Pose& t_i, const Pose& t_j, const Pose& measurement) {
  EdgeLinearization lin;
  lin.residual = log_map(measurement.inverse() * t_i.inverse() * t_j);
  const Mat6 jr_inv = se3_right_jacobian_inverse(lin.residual);
  lin.jacobian_j = jr_inv;
  lin.jacobian_i = -jr_inv * (t_j.inverse() * t_i).adjoint();
  return lin;
}

PoseGraph PoseGraph::from_odometry(std::span<const Pose> odometry, double sigma_t, double sigma_r) {
  PoseGraph g(std::vector<Pose>(odometry.begin(), odometry.end()));
  const Mat6 info = diagonal_information(sigma_t, sigma_r);
  for (std::size_t k = 0; k + 1 < odometry.size(); ++k) {
    g.edges_.push_back({k, k + 1, odometry[k].inverse() * odometry[k + 1], info, false});
  }
  return g;
}

void PoseGraph::add_edge(PoseGraphEdge edge) {
  if (edge.i >= nodes_.size() || edge.j >= nodes_.size()) {
    throw std::out_of_range("edge references node " + std::to_string(std::max(edge.i, edge.j)) +
                            " of " + std::to_string(nodes_.size()));
  }
  edges_.push_back(std::move(edge));
}

void PoseGraph::add_loop(const LoopConstraint& c) {
  add_edge({c.frame_i, c.frame_j, c.relative_pose, c.information, true});
}

double PoseGraph::cost(const std::vector<Pose>& nodes, const OptimizerParams& params) const {
  double total = 0.0;
  for (const auto& e : edges_) {
    const Vec6 r = log_map(e.measurement.inverse() * nodes[e.i].inverse() * nodes[e.j]);
    total += robust_cost(r.dot(e.information * r), e.loop, params);
  }
  return total;
}

OptimizationResult PoseGraph::optimize(const OptimizerParams& params) const {
  OptimizationResult result;
  result.nodes = nodes_;
  result.initial_cost = cost(nodes_, params);
  result.final_cost = result.initial_cost;
  if (nodes_.size() < 2 || edges_.empty()) return result;

  const auto n = static_cast<Eigen::Index>(6 * (nodes_.size() - 1));
  double lambda = params.initial_lambda;
  // Node k > 0 owns variables [6(k-1), 6k).
  const auto offset = [](std::size_t k) { return static_cast<Eigen::Index>(6 * (k - 1)); };

  for (int it = 0; it < params.max_iterations; ++it) {
    std::vector<Triplet> triplets;
    triplets.reserve(edges_.size() * 4 * 36);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    for (const auto& e : edges_) {
      const auto lin = linearize_edge(result.nodes[e.i], result.nodes[e.j], e.measurement);
      const double w =
          robust_weight(lin.residual.dot(e.information * lin.residual), e.loop, params);
      const Mat6 info = w * e.information;
      const std::size_t ids[2] = {e.i, e.j};
      const Mat6* jac[2] = {&lin.jacobian_i, &lin.jacobian_j};
      for (int a = 0; a < 2; ++a) {
        if (ids[a] == 0) continue;
        b.segment<6>(offset(ids[a])) += jac[a]->transpose() * info * lin.residual;
        for (int c = 0; c < 2; ++c) {
          if (ids[c] == 0) continue;
          const Mat6 block = jac[a]->transpose() * info * *jac[c];
          for (int r = 0; r < 6; ++r) {
            for (int s = 0; s < 6; ++s) {
              triplets.emplace_back(offset(ids[a]) + r, offset(ids[c]) + s, block(r, s));
            }
          }
        }
      }
    }
    Eigen::SparseMatrix<double> h(n, n);
    h.setFromTriplets(triplets.begin(), triplets.end());
    const Eigen::VectorXd diag = h.diagonal();

    bool improved = false;
    bool done = false;
    while (!improved) {
      Eigen::SparseMatrix<double> damped = h;
      for (Eigen::Index k = 0; k < n; ++k) damped.coeffRef(k, k) += lambda * std::max(diag(k), 1e-9);
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(damped);
      if (solver.info() != Eigen::Success) {
        throw Error(ErrorCode::SingularNormalEquations, "normal equations could not be factorized");
      }
      const Eigen::VectorXd delta = solver.solve(-b);
      if (delta.norm() < params.step_tolerance) {
        done = true;
        break;
      }
      std::vector<Pose> trial = result.nodes;
      for (std::size_t k = 1; k < trial.size(); ++k) {
        trial[k] = trial[k] * exp_map(delta.segment<6>(offset(k)));
      }
      const double trial_cost = cost(trial, params);
      if (trial_cost < result.final_cost) {
        const double change = (result.final_cost - trial_cost) / std::max(result.final_cost, 1e-300);
        result.nodes = std::move(trial);
        result.final_cost = trial_cost;
        lambda = std::max(lambda / 10.0, 1e-12);
        improved = true;
        if (change < params.relative_cost_tolerance) done = true;
      } else {
        lambda *= 10.0;
        if (lambda > 1e12) {
          done = true;
          break;
        }
      }
    }
    result.iterations = it + 1;
    if (done) break;
  }
  return result;
}

}  // namespace textlcd
