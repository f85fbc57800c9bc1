#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "textlcd/observation_db.hpp"

namespace textlcd {

/// Cumulative path length along a pose sequence; distance(a, b) is the
/// travelled distance between two frames.
class TravelDistance {
 public:
  TravelDistance() = default;
  explicit TravelDistance(std::span<const Pose> poses) { extend(poses); }

  /// Appends the poses beyond those already indexed.
  void extend(std::span<const Pose> poses);

  std::size_t size() const { return cumulative_.size(); }
  double at(std::size_t frame) const { return cumulative_.at(frame); }
  double between(std::size_t a, std::size_t b) const {
    return std::abs(cumulative_.at(b) - cumulative_.at(a));
  }

 private:
  std::vector<double> cumulative_;
  Vec3 last_ = Vec3::Zero();
};

/// Reference to a raw observation: entities_in_frame(frame)[index].
struct ObservationRef {
  std::size_t frame = 0;
  std::size_t index = 0;
  bool operator==(const ObservationRef&) const = default;
};

struct LtemEntity {
  std::string content;
  TextCategory category = TextCategory::Generic;
  Vec3 position = Vec3::Zero();  // odometry world frame
  std::size_t source_frame = 0;  // first contributing frame
  std::vector<ObservationRef> members;
};

/// Local text entities map around a center frame.
struct Ltem {
  std::size_t center_frame = 0;
  std::size_t first_frame = 0;
  std::size_t last_frame = 0;
  std::vector<LtemEntity> entities;

  /// Index of the merged entity containing `ref`, if any.
  std::optional<std::size_t> find(const ObservationRef& ref) const;
};

enum class LtemDirection { PastOnly, TwoSided };

Ltem build_ltem(const ObservationDatabase& db, std::span<const Pose> odometry,
                const TravelDistance& travel, std::size_t center, double d_ltem,
                LtemDirection direction, double r_merge = 1.0);

Ltem build_ltem(const ObservationDatabase& db, std::span<const Pose> odometry, std::size_t center,
                double d_ltem, LtemDirection direction, double r_merge = 1.0);

struct Association {
  std::size_t entity_c = 0;
  std::size_t entity_p = 0;
  bool operator==(const Association&) const = default;
};

/// Every cross pair with equal content, ordered by (entity_c, entity_p).
std::vector<Association> putative_associations(const Ltem& m_c, const Ltem& m_p);

/// Linear hat loss on the pairwise distance discrepancy; 1 at zero, 0 beyond epsilon.
double consistency_score(const Vec3& p_i, const Vec3& p_j, const Vec3& q_i, const Vec3& q_j,
                         double epsilon);
double consistency_score(const Association& a_i, const Association& a_j, const Ltem& m_c,
                         const Ltem& m_p, double epsilon);

struct ConsistencyGraph {
  Eigen::MatrixXd affinity;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> exclusion;

  std::size_t size() const { return static_cast<std::size_t>(affinity.rows()); }
  /// Pairwise compatible: not excluded and strictly positive affinity.
  bool compatible(std::size_t i, std::size_t j) const {
    return !exclusion(i, j) && affinity(i, j) > 0.0;
  }
};

ConsistencyGraph build_consistency_graph(const std::vector<Association>& associations,
                                         const Ltem& m_c, const Ltem& m_p, double epsilon);

enum class SolverMode { Exact, Relaxed, Auto };

inline constexpr std::size_t kExactSolverCutoff = 20;

/// Sum of affinities over the subset divided by its size.
double subset_density(const ConsistencyGraph& g, std::span<const std::size_t> subset);

/// Densest mutually compatible subset, returned sorted. Exact mode
/// enumerates every clique of the compatibility graph and falls back to
/// the relaxation beyond kExactSolverCutoff nodes; Auto picks by size.
std::vector<std::size_t> solve_consistent_set(const ConsistencyGraph& g,
                                              SolverMode mode = SolverMode::Auto);

std::vector<std::size_t> solve_exact(const ConsistencyGraph& g);
std::vector<std::size_t> solve_relaxed(const ConsistencyGraph& g);

struct AssociationParams {
  double epsilon = 0.5;
  double d_ltem = 10.0;
  double r_merge = 1.0;
  std::size_t min_consistent = 3;
  SolverMode solver = SolverMode::Auto;
  // Reject arrangements that place two different ID texts at the same spot.
  bool id_conflict_check = true;
  // Require the candidate's text pose to carry the consistent set onto its
  // partners; the allowed offset grows by `alignment_angle` per meter of
  // distance from the candidate entity.
  bool alignment_check = true;
  double alignment_angle = 0.1;
  // ID texts seen in both maps must coincide after alignment, and two maps
  // that both hold ID texts must share at least one.
  bool id_corroboration = true;
};

struct MatchedPair {
  ObservationRef current;
  ObservationRef candidate;
  Pose pose_current;    // T_text^{L_c}
  Pose pose_candidate;  // T_text^{L_p}
  std::size_t consistent_count = 0;
};

/// True when the aligned arrangement maps an ID text in one map onto a
/// location holding only different ID texts in the other.
bool has_id_conflict(const Ltem& m_c, const Ltem& m_p, const std::vector<Association>& associations,
                     std::span<const std::size_t> consistent_set, double epsilon, double r_merge);

/// Number of points that are more than `radius` from every earlier kept point.
std::size_t distinct_locations(std::span<const Vec3> positions, double radius);

/// Number of distinct current-map locations in `consistent_set` whose candidate-map entity
/// lands within epsilon + angle * |p_c - pivot| of its current-map partner
/// under `p_to_c`.
std::size_t aligned_count(const Ltem& m_c, const Ltem& m_p,
                          const std::vector<Association>& associations,
                          std::span<const std::size_t> consistent_set, const Pose& p_to_c,
                          const Vec3& pivot, double epsilon, double angle);

/// False when an ID content present in both maps is misplaced under
/// `p_to_c`, or when both maps hold ID texts without any content in common.
bool ids_corroborate(const Ltem& m_c, const Ltem& m_p, const Pose& p_to_c, const Vec3& pivot,
                     double epsilon, double angle);

/// Outcome of the graph-theoretic check between two prepared maps.
struct VerificationResult {
  std::vector<Association> associations;
  std::vector<std::size_t> consistent_set;
  bool accepted = false;
};

VerificationResult verify_maps(const Ltem& m_c, const Ltem& m_p, std::size_t entity_c,
                               std::size_t entity_p, const AssociationParams& params);

/// Builds both maps from the database and checks that the current entity's
/// association survives in a consistent set of at least min_consistent
/// elements. The current observation must already be in the database.
std::optional<MatchedPair> verify_candidate(const ObservationDatabase& db,
                                            std::span<const Pose> odometry,
                                            const ObservationRef& current,
                                            const ObservationRef& candidate,
                                            const AssociationParams& params);

/// Debug export of a consistency graph as adjacency JSON.
std::string consistency_graph_json(const ConsistencyGraph& g,
                                   const std::vector<Association>& associations);

}  // namespace textlcd
