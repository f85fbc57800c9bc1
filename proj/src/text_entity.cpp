#include "textlcd/text_entity.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

namespace textlcd {

std::string normalize_content(const std::string& raw) {
  auto first = std::find_if_not(raw.begin(), raw.end(),
                                [](unsigned char c) { return std::isspace(c); });
  auto last = std::find_if_not(raw.rbegin(), raw.rend(),
                               [](unsigned char c) { return std::isspace(c); })
                  .base();
  std::string out;
  if (first < last) out.assign(first, last);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

PointCloud accumulate_local_cloud(std::span<const LidarFrame> frames, double t_now, double window) {
  auto by_time = [](const LidarFrame& f, double t) { return f.timestamp < t; };
  auto begin = std::lower_bound(frames.begin(), frames.end(), t_now - window, by_time);
  auto end = std::upper_bound(frames.begin(), frames.end(), t_now,
                              [](double t, const LidarFrame& f) { return t < f.timestamp; });
  if (begin >= end) {
    throw Error(ErrorCode::EmptyWindow, "no LiDAR frame within the accumulation window");
  }
  const Pose world_to_ref = std::prev(end)->pose.inverse();
  std::size_t total = 0;
  for (auto it = begin; it != end; ++it) total += it->points.size();
  PointCloud out;
  out.reserve(total);
  for (auto it = begin; it != end; ++it) {
    const Pose rel = world_to_ref * it->pose;
    for (const auto& p : it->points) out.push_back(rel * p);
  }
  return out;
}

bool point_in_quad(const std::array<PixelPoint, 4>& quad, const PixelPoint& px) {
  bool inside = false;
  for (std::size_t i = 0, j = quad.size() - 1; i < quad.size(); j = i++) {
    const auto& a = quad[j];
    const auto& b = quad[i];
    const double cross = (b.u - a.u) * (px.v - a.v) - (b.v - a.v) * (px.u - a.u);
    const double len2 = (b.u - a.u) * (b.u - a.u) + (b.v - a.v) * (b.v - a.v);
    if (std::abs(cross) <= 1e-12 * std::max(1.0, len2) &&
        px.u >= std::min(a.u, b.u) && px.u <= std::max(a.u, b.u) &&
        px.v >= std::min(a.v, b.v) && px.v <= std::max(a.v, b.v)) {
      return true;
    }
    if ((a.v > px.v) != (b.v > px.v)) {
      const double u_cross = a.u + (px.v - a.v) * (b.u - a.u) / (b.v - a.v);
      if (px.u < u_cross) inside = !inside;
    }
  }
  return inside;
}

PointCloud points_in_region(std::span<const Vec3> cloud_in_cam, const CameraIntrinsics& k,
                            const std::array<PixelPoint, 4>& quad) {
  double umin = quad[0].u, umax = quad[0].u, vmin = quad[0].v, vmax = quad[0].v;
  for (const auto& q : quad) {
    umin = std::min(umin, q.u);
    umax = std::max(umax, q.u);
    vmin = std::min(vmin, q.v);
    vmax = std::max(vmax, q.v);
  }
  PointCloud out;
  for (const auto& p : cloud_in_cam) {
    if (!(p.z() > kDepthEpsilon)) continue;
    const PixelPoint px{k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy};
    if (px.u < umin || px.u > umax || px.v < vmin || px.v > vmax) continue;
    if (point_in_quad(quad, px)) out.push_back(p);
  }
  return out;
}

namespace {

PlaneParams least_squares_plane(std::span<const Vec3> points, const std::vector<std::size_t>& idx) {
  Vec3 centroid = Vec3::Zero();
  for (auto i : idx) centroid += points[i];
  centroid /= static_cast<double>(idx.size());
  Mat3 cov = Mat3::Zero();
  for (auto i : idx) {
    const Vec3 d = points[i] - centroid;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  PlaneParams plane;
  plane.normal = eig.eigenvectors().col(0).normalized();
  plane.offset = -plane.normal.dot(centroid);
  return plane;
}

std::vector<std::size_t> collect_inliers(std::span<const Vec3> points, const PlaneParams& plane,
                                         double threshold) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (std::abs(plane.signed_distance(points[i])) < threshold) idx.push_back(i);
  }
  return idx;
}

}  // namespace

PlaneParams fit_plane_ransac(std::span<const Vec3> points, std::uint64_t seed,
                             const RansacParams& params, std::vector<std::size_t>* inliers) {
  const std::size_t n = points.size();
  if (n < params.min_inliers || n < 3) {
    throw Error(ErrorCode::TooFewPoints,
                "plane fit needs at least " + std::to_string(params.min_inliers) + " points, got " +
                    std::to_string(n));
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);

  std::size_t best_count = 0;
  PlaneParams best;
  bool any_valid = false;
  for (int it = 0; it < params.iterations; ++it) {
    const std::size_t a = pick(rng);
    std::size_t b = pick(rng);
    std::size_t c = pick(rng);
    if (a == b || b == c || a == c) continue;
    const Vec3 ab = points[b] - points[a];
    const Vec3 ac = points[c] - points[a];
    const Vec3 normal = ab.cross(ac);
    const double scale = ab.norm() * ac.norm();
    if (normal.norm() <= 1e-9 * std::max(scale, 1e-300)) continue;
    any_valid = true;
    PlaneParams candidate;
    candidate.normal = normal.normalized();
    candidate.offset = -candidate.normal.dot(points[a]);
    std::size_t count = 0;
    for (const auto& p : points) {
      if (std::abs(candidate.signed_distance(p)) < params.inlier_threshold) ++count;
    }
    if (count > best_count) {
      best_count = count;
      best = candidate;
    }
  }
  if (!any_valid) {
    throw Error(ErrorCode::DegenerateSample, "every sampled triple was collinear");
  }

  PlaneParams plane = best;
  auto idx = collect_inliers(points, best, params.inlier_threshold);
  if (idx.size() >= 3) {
    plane = least_squares_plane(points, idx);
    idx = collect_inliers(points, plane, params.inlier_threshold);
  }
  const double ratio = static_cast<double>(idx.size()) / static_cast<double>(n);
  if (idx.size() < params.min_inliers || ratio < params.min_inlier_ratio) {
    throw Error(ErrorCode::LowInlierRatio,
                "plane inlier ratio " + std::to_string(ratio) + " below threshold");
  }
  if (plane.offset < 0.0) {
    plane.normal = -plane.normal;
    plane.offset = -plane.offset;
  }
  if (inliers) *inliers = std::move(idx);
  return plane;
}

Pose make_entity_pose(const CameraIntrinsics& k, const PlaneParams& plane,
                      const std::array<PixelPoint, 4>& quad) {
  const PixelPoint left{0.5 * (quad[0].u + quad[3].u), 0.5 * (quad[0].v + quad[3].v)};
  const PixelPoint right{0.5 * (quad[1].u + quad[2].u), 0.5 * (quad[1].v + quad[2].v)};
  const Vec3 p_l = backproject(k, plane, left);
  const Vec3 p_r = backproject(k, plane, right);
  const Vec3 edge = p_r - p_l;
  if (edge.norm() < 1e-6) {
    throw Error(ErrorCode::DegenerateEdge, "text region has no horizontal extent");
  }
  const Vec3 n = plane.normal.normalized();
  // Project the reading direction into the plane so the frame is orthonormal.
  const Vec3 in_plane = edge - n.dot(edge) * n;
  if (in_plane.norm() < 1e-6) {
    throw Error(ErrorCode::DegenerateEdge, "text edge is parallel to the plane normal");
  }
  const Vec3 x = in_plane.normalized();
  Mat3 r;
  r.col(0) = x;
  r.col(1) = n.cross(x);
  r.col(2) = n;
  return Pose(r, p_l);
}

std::size_t latest_frame_at_or_before(std::span<const OdometryFrame> odometry, double t) {
  auto it = std::upper_bound(odometry.begin(), odometry.end(), t,
                             [](double value, const OdometryFrame& f) { return value < f.timestamp; });
  if (it == odometry.begin()) return kNoFrame;
  return static_cast<std::size_t>(std::distance(odometry.begin(), it) - 1);
}

Pose anchor_between(const Pose& pose_in_cam, const CalibratedRig& rig, const OdometryFrame& frame_i,
                    const OdometryFrame& frame_k, double t_image) {
  const double span = frame_k.timestamp - frame_i.timestamp;
  if (!(t_image >= frame_i.timestamp && t_image <= frame_k.timestamp) || !(span > 0.0)) {
    throw Error(ErrorCode::UnbracketedTimestamp, "image timestamp is not bracketed by the frames");
  }
  const double s = (t_image - frame_i.timestamp) / span;
  const Pose lidar_j_in_i = interpolate(frame_i.pose.inverse() * frame_k.pose, s);
  return lidar_j_in_i * rig.extrinsic_cam_in_lidar * pose_in_cam;
}

AnchoredPose anchor_entity(const Pose& pose_in_cam, const CalibratedRig& rig, double t_image,
                           std::span<const OdometryFrame> odometry) {
  const std::size_t i = latest_frame_at_or_before(odometry, t_image);
  if (i == kNoFrame) {
    throw Error(ErrorCode::UnbracketedTimestamp, "image timestamp precedes all odometry");
  }
  if (odometry[i].timestamp == t_image) {
    return {i, rig.extrinsic_cam_in_lidar * pose_in_cam};
  }
  if (i + 1 >= odometry.size()) {
    throw Error(ErrorCode::UnbracketedTimestamp, "image timestamp is after the last odometry frame");
  }
  return {i, anchor_between(pose_in_cam, rig, odometry[i], odometry[i + 1], t_image)};
}

IdPattern::IdPattern(const std::string& pattern) : source_(pattern) {
  try {
    regex_ = std::regex(pattern, std::regex::ECMAScript | std::regex::icase);
  } catch (const std::regex_error& e) {
    throw Error(ErrorCode::InvalidPattern, "invalid ID pattern '" + pattern + "': " + e.what());
  }
}

bool IdPattern::matches(const std::string& content) const {
  return !content.empty() && std::regex_match(content, regex_);
}

TextCategory classify_text(const std::string& content, const IdPattern& pattern) {
  return pattern.matches(content) ? TextCategory::ID : TextCategory::Generic;
}

TextCategory classify_text(const std::string& content, const std::string& pattern) {
  return classify_text(content, IdPattern(pattern));
}

}  // namespace textlcd
