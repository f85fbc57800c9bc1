#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "textlcd/association.hpp"
#include "textlcd/log_io.hpp"
#include "textlcd/observation_db.hpp"
#include "textlcd/point_search.hpp"

namespace textlcd {

enum class LoopSource { IDText, GenericText };

/// Relative pose prior T_{L_j}^{L_i} between a current frame i and an
/// earlier frame j.
struct LoopConstraint {
  std::size_t frame_i = 0;
  std::size_t frame_j = 0;
  Pose relative_pose;
  Mat6 information = Mat6::Identity();
  LoopSource source = LoopSource::GenericText;
};

struct LocalCloud {
  std::size_t frame = 0;
  PointCloud points;  // LiDAR frame
};

/// T_text^{L_i} * (T_text^{L_j})^-1.
Pose relative_pose_from_entities(const Pose& t_text_li, const Pose& t_text_lj);

struct IcpParams {
  int max_iterations = 50;
  double convergence = 1e-6;  // change in rms, meters
  double correspondence_cutoff = 0.5;
  double min_fitness = 0.6;
  double max_rms = 0.15;
  std::size_t min_points = 50;
  double voxel = 0.15;  // downsampling applied by the loop detector
};

struct IcpResult {
  Pose refined;
  double fitness = 0.0;  // fraction of source points with a correspondence
  double rms = 0.0;
  int iterations = 0;
  bool converged = false;
  bool accepted = false;
};

/// Point-to-point ICP aligning `source` into `target` starting from `init`
/// (target ~ refined * source).
IcpResult icp_align(const KdTree& target, std::span<const Vec3> source, const Pose& init,
                    const IcpParams& params);

/// Aligns cloud_j onto cloud_i; `init` and the result are T_{L_j}^{L_i}.
IcpResult icp_verify(const LocalCloud& cloud_i, const LocalCloud& cloud_j, const Pose& init,
                     const IcpParams& params = {});

/// Diagonal information in the (translation, rotation) residual layout.
Mat6 diagonal_information(double sigma_t, double sigma_r);

struct LoopParams {
  double s_min = 10.0;
  // Upper bound on the text-derived distance between loop endpoints.
  double max_loop_distance = 1.0;
  std::size_t cooldown_frames = 10;
  // Text and odometry relative translations may differ by at most
  // drift_base + drift_rate * travelled distance.
  double drift_base = 1.0;
  double drift_rate = 0.02;
  bool icp_refine = true;
  bool icp_generic = true;
  double sigma_t = 0.1;
  double sigma_r = 0.05;
  IcpParams icp;
  AssociationParams association;
};

/// Per-frame loop closure over ID and generic text entities. Owns the
/// observation database; entities handed to process_frame are inserted
/// before verification, so an entity never matches itself.
class LoopDetector {
 public:
  /// Supplies the accumulated local cloud of a frame, in that frame.
  using CloudProvider = std::function<std::optional<PointCloud>(std::size_t frame)>;

  explicit LoopDetector(LoopParams params = {}, CloudProvider clouds = {});

  std::vector<LoopConstraint> process_frame(std::size_t frame, std::span<const TextEntity> entities,
                                            std::span<const Pose> odometry);

  /// Candidates for entities already stored at `frame`, against the
  /// current database and cooldown state. Does not record anything.
  std::vector<LoopConstraint> evaluate_frame(std::size_t frame,
                                             std::span<const Pose> odometry) const;

  const ObservationDatabase& database() const { return db_; }
  const std::vector<LoopConstraint>& constraints() const { return emitted_; }
  const LoopParams& params() const { return params_; }

  struct Stats {
    std::size_t id_candidates = 0;
    std::size_t generic_candidates = 0;
    std::size_t icp_runs = 0;
    std::size_t icp_rejections = 0;
    std::size_t graph_rejections = 0;
  };
  const Stats& stats() const { return stats_; }

 private:
  struct CloudEntry {
    std::vector<Vec3> points;
    std::unique_ptr<KdTree> tree;
  };

  const CloudEntry* cloud(std::size_t frame) const;
  const Ltem& candidate_ltem(std::size_t frame, std::span<const Pose> odometry,
                             std::size_t current) const;
  bool suppressed(std::size_t i, std::size_t j, const std::vector<LoopConstraint>& pending) const;

  LoopParams params_;
  CloudProvider clouds_;
  ObservationDatabase db_;
  std::vector<LoopConstraint> emitted_;

  mutable TravelDistance travel_;
  mutable std::unordered_map<std::size_t, Ltem> ltem_cache_;
  mutable std::unordered_map<std::size_t, CloudEntry> cloud_cache_;
  mutable Stats stats_;
};

Json constraint_to_json(const LoopConstraint& c);
LoopConstraint constraint_from_json(const Json& j);

}  // namespace textlcd
