#include "textlcd/loop_closure.hpp"

#include <cmath>

#include <Eigen/Geometry>

namespace textlcd {

Pose relative_pose_from_entities(const Pose& t_text_li, const Pose& t_text_lj) {
  return t_text_li * t_text_lj.inverse();
}

IcpResult icp_align(const KdTree& target, std::span<const Vec3> source, const Pose& init,
                    const IcpParams& params) {
  if (target.size() < params.min_points || source.size() < params.min_points) {
    throw Error(ErrorCode::TooFewPoints, "ICP needs at least " +
                                             std::to_string(params.min_points) + " points per cloud");
  }
  IcpResult result;
  result.refined = init;
  double previous_rms = std::numeric_limits<double>::infinity();
  Eigen::Matrix3Xd src(3, source.size());
  Eigen::Matrix3Xd dst(3, source.size());

  for (int it = 0; it < params.max_iterations; ++it) {
    std::size_t matched = 0;
    double sq_sum = 0.0;
    for (const auto& p : source) {
      const Vec3 moved = result.refined * p;
      const auto nn = target.nearest(moved, params.correspondence_cutoff);
      if (!nn) continue;
      src.col(static_cast<Eigen::Index>(matched)) = p;
      dst.col(static_cast<Eigen::Index>(matched)) = target.points()[nn->index];
      sq_sum += nn->squared_distance;
      ++matched;
    }
    result.iterations = it + 1;
    result.fitness = static_cast<double>(matched) / static_cast<double>(source.size());
    if (matched < 3) {
      result.rms = std::numeric_limits<double>::infinity();
      break;
    }
    result.rms = std::sqrt(sq_sum / static_cast<double>(matched));
    if (std::abs(previous_rms - result.rms) < params.convergence) {
      result.converged = true;
      break;
    }
    previous_rms = result.rms;
    const auto m = static_cast<Eigen::Index>(matched);
    const Eigen::Matrix4d fit = Eigen::umeyama(src.leftCols(m), dst.leftCols(m), false);
    result.refined = Pose(Mat3(fit.topLeftCorner<3, 3>()), Vec3(fit.topRightCorner<3, 1>()));
  }
  result.accepted = result.fitness >= params.min_fitness && result.rms <= params.max_rms;
  return result;
}

IcpResult icp_verify(const LocalCloud& cloud_i, const LocalCloud& cloud_j, const Pose& init,
                     const IcpParams& params) {
  const KdTree tree(cloud_i.points);
  return icp_align(tree, cloud_j.points, init, params);
}

Mat6 diagonal_information(double sigma_t, double sigma_r) {
  Vec6 d;
  d << Vec3::Constant(1.0 / (sigma_t * sigma_t)), Vec3::Constant(1.0 / (sigma_r * sigma_r));
  return d.asDiagonal();
}

LoopDetector::LoopDetector(LoopParams params, CloudProvider clouds)
    : params_(std::move(params)), clouds_(std::move(clouds)) {}

std::vector<LoopConstraint> LoopDetector::process_frame(std::size_t frame,
                                                        std::span<const TextEntity> entities,
                                                        std::span<const Pose> odometry) {
  for (const auto& e : entities) db_.insert(frame, e);
  auto found = evaluate_frame(frame, odometry);
  emitted_.insert(emitted_.end(), found.begin(), found.end());
  return found;
}

const LoopDetector::CloudEntry* LoopDetector::cloud(std::size_t frame) const {
  auto it = cloud_cache_.find(frame);
  if (it != cloud_cache_.end()) return &it->second;
  if (!clouds_) return nullptr;
  auto raw = clouds_(frame);
  if (!raw) return nullptr;
  CloudEntry entry;
  entry.points = params_.icp.voxel > 0.0 ? voxel_downsample(*raw, params_.icp.voxel) : *raw;
  entry.tree = std::make_unique<KdTree>(entry.points);
  return &cloud_cache_.emplace(frame, std::move(entry)).first->second;
}

const Ltem& LoopDetector::candidate_ltem(std::size_t frame, std::span<const Pose> odometry,
                                         std::size_t current) const {
  auto it = ltem_cache_.find(frame);
  if (it != ltem_cache_.end()) return it->second;
  const auto& a = params_.association;
  Ltem ltem = build_ltem(db_, odometry, travel_, frame, a.d_ltem, LtemDirection::TwoSided,
                         a.r_merge);
  // Only windows that can no longer grow are reused.
  const std::size_t limit = std::min(odometry.size(), travel_.size());
  if (ltem.last_frame < current && ltem.last_frame + 1 < limit) {
    return ltem_cache_.emplace(frame, std::move(ltem)).first->second;
  }
  static thread_local Ltem scratch;
  scratch = std::move(ltem);
  return scratch;
}

bool LoopDetector::suppressed(std::size_t i, std::size_t j,
                              const std::vector<LoopConstraint>& pending) const {
  const auto near = [&](const LoopConstraint& c) {
    const auto di = i > c.frame_i ? i - c.frame_i : c.frame_i - i;
    const auto dj = j > c.frame_j ? j - c.frame_j : c.frame_j - j;
    return di < params_.cooldown_frames && dj < params_.cooldown_frames;
  };
  for (auto it = emitted_.rbegin(); it != emitted_.rend(); ++it) {
    if (it->frame_i + params_.cooldown_frames <= i) break;
    if (near(*it)) return true;
  }
  for (const auto& c : pending) {
    if (near(c)) return true;
  }
  return false;
}

std::vector<LoopConstraint> LoopDetector::evaluate_frame(std::size_t frame,
                                                         std::span<const Pose> odometry) const {
  std::vector<LoopConstraint> out;
  const auto& current = db_.entities_in_frame(frame);
  if (current.empty() || frame >= odometry.size()) return out;
  if (travel_.size() < odometry.size()) travel_.extend(odometry);

  const auto& a = params_.association;
  std::optional<Ltem> m_c;
  const Mat6 info_refined = diagonal_information(params_.sigma_t, params_.sigma_r);
  const Mat6 info_coarse = diagonal_information(2.0 * params_.sigma_t, 2.0 * params_.sigma_r);

  const auto run_icp = [&](std::size_t j, const Pose& init) -> std::optional<IcpResult> {
    const CloudEntry* ci = cloud(frame);
    const CloudEntry* cj = cloud(j);
    if (!ci || !cj) return std::nullopt;
    if (ci->points.size() < params_.icp.min_points || cj->points.size() < params_.icp.min_points) {
      return std::nullopt;
    }
    ++stats_.icp_runs;
    return icp_align(*ci->tree, cj->points, init, params_.icp);
  };

  for (std::size_t idx = 0; idx < current.size(); ++idx) {
    const auto& entity = current[idx];
    for (std::size_t k = 0; k < db_.frames_observing(entity.content).size(); ++k) {
      const auto& obs = db_.frames_observing(entity.content)[k];
      if (obs.frame >= frame) continue;
      if (travel_.between(obs.frame, frame) <= params_.s_min) continue;
      const Pose initial = relative_pose_from_entities(entity.pose, obs.pose);
      if (initial.translation().norm() > params_.max_loop_distance) continue;
      const double travelled = travel_.between(obs.frame, frame);
      const Vec3 odom_rel = (odometry[frame].inverse() * odometry[obs.frame]).translation();
      if ((odom_rel - initial.translation()).norm() >
          params_.drift_base + params_.drift_rate * travelled) {
        continue;
      }
      if (suppressed(frame, obs.frame, out)) continue;

      LoopConstraint c;
      c.frame_i = frame;
      c.frame_j = obs.frame;
      c.relative_pose = initial;
      c.information = info_coarse;

      if (entity.category == TextCategory::ID) {
        c.source = LoopSource::IDText;
        ++stats_.id_candidates;
        if (params_.icp_refine) {
          const auto icp = run_icp(obs.frame, initial);
          if (!icp || !icp->accepted) {
            ++stats_.icp_rejections;
            continue;
          }
          c.relative_pose = icp->refined;
          c.information = info_refined;
        }
      } else {
        c.source = LoopSource::GenericText;
        ++stats_.generic_candidates;
        if (!m_c) {
          m_c = build_ltem(db_, odometry, travel_, frame, a.d_ltem, LtemDirection::PastOnly,
                           a.r_merge);
        }
        const Ltem& m_p = candidate_ltem(obs.frame, odometry, frame);
        const auto ec = m_c->find({frame, idx});
        const auto& in_p = db_.entities_in_frame(obs.frame);
        std::optional<std::size_t> ep;
        for (std::size_t q = 0; q < in_p.size() && !ep; ++q) {
          if (in_p[q].content == entity.content && in_p[q].pose.translation() == obs.pose.translation() &&
              in_p[q].pose.rotation() == obs.pose.rotation()) {
            ep = m_p.find({obs.frame, q});
          }
        }
        if (!ec || !ep) {
          ++stats_.graph_rejections;
          continue;
        }
        const auto verdict = verify_maps(*m_c, m_p, *ec, *ep, a);
        bool accepted = verdict.accepted;
        const Pose p_to_c = odometry[frame] * initial * odometry[obs.frame].inverse();
        const Vec3& pivot = m_c->entities[*ec].position;
        if (accepted && a.alignment_check) {
          accepted = aligned_count(*m_c, m_p, verdict.associations, verdict.consistent_set, p_to_c,
                                   pivot, a.epsilon, a.alignment_angle) >= a.min_consistent;
        }
        if (accepted && a.id_corroboration) {
          accepted = ids_corroborate(*m_c, m_p, p_to_c, pivot, a.epsilon, a.alignment_angle);
        }
        if (!accepted) {
          ++stats_.graph_rejections;
          continue;
        }
        if (params_.icp_refine && params_.icp_generic) {
          const auto icp = run_icp(obs.frame, initial);
          if (icp && icp->accepted) {
            c.relative_pose = icp->refined;
            c.information = info_refined;
          }
        }
      }
      out.push_back(c);
    }
  }
  return out;
}

Json constraint_to_json(const LoopConstraint& c) {
  Json diag = Json::array();
  for (int k = 0; k < 6; ++k) diag.push_back(c.information(k, k));
  return Json{{"i", c.frame_i},
              {"j", c.frame_j},
              {"pose", pose_to_json(c.relative_pose)},
              {"info_diag", std::move(diag)},
              {"source", c.source == LoopSource::IDText ? "id" : "generic"}};
}

LoopConstraint constraint_from_json(const Json& j) {
  LoopConstraint c;
  c.frame_i = j.at("i").get<std::size_t>();
  c.frame_j = j.at("j").get<std::size_t>();
  c.relative_pose = pose_from_json(j.at("pose"));
  const Json& diag = j.at("info_diag");
  if (!diag.is_array() || diag.size() != 6) throw std::invalid_argument("info_diag needs 6 values");
  c.information = Mat6::Zero();
  for (int k = 0; k < 6; ++k) c.information(k, k) = diag[static_cast<std::size_t>(k)].get<double>();
  const auto source = j.at("source").get<std::string>();
  if (source != "id" && source != "generic") throw std::invalid_argument("unknown source " + source);
  c.source = source == "id" ? LoopSource::IDText : LoopSource::GenericText;
  return c;
}

}  // namespace textlcd
