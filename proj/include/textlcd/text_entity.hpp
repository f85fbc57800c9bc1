#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <regex>
#include <span>
#include <string>
#include <vector>

#include "textlcd/geometry.hpp"

namespace textlcd {

using PointCloud = std::vector<Vec3>;

enum class TextCategory { ID, Generic };

/// Raw OCR output. Quad corners are ordered top-left, top-right,
/// bottom-right, bottom-left.
struct TextDetection {
  std::string content;
  double confidence = 0.0;
  std::array<PixelPoint, 4> quad{};
  double timestamp = 0.0;
};

/// A recognized text with its pose anchored in a LiDAR keyframe.
struct TextEntity {
  std::string content;
  TextCategory category = TextCategory::Generic;
  Pose pose_in_anchor;  // T_text^L
  std::size_t anchor_frame = 0;
  double confidence = 0.0;
};

struct CalibratedRig {
  CameraIntrinsics intrinsics;
  Pose extrinsic_cam_in_lidar;  // T_C^L
};

struct OdometryFrame {
  double timestamp = 0.0;
  Pose pose;  // T_L^W
};

struct LidarFrame {
  double timestamp = 0.0;
  Pose pose;  // T_L^W
  PointCloud points;  // in the LiDAR frame
};

struct RansacParams {
  int iterations = 100;
  double inlier_threshold = 0.02;
  std::size_t min_inliers = 20;
  double min_inlier_ratio = 0.5;
};

/// Trim surrounding whitespace and uppercase; the dictionary key form.
std::string normalize_content(const std::string& raw);

/// Gathers the points of every frame inside [t_now - window, t_now] and
/// expresses them in the latest frame at or before t_now. Frames must be
/// sorted by timestamp.
PointCloud accumulate_local_cloud(std::span<const LidarFrame> frames, double t_now,
                                  double window = 1.0);

/// Boundary-inclusive point-in-polygon test.
bool point_in_quad(const std::array<PixelPoint, 4>& quad, const PixelPoint& px);

PointCloud points_in_region(std::span<const Vec3> cloud_in_cam, const CameraIntrinsics& k,
                            const std::array<PixelPoint, 4>& quad);

/// RANSAC plane fit followed by a least-squares refit on the inliers. The
/// returned normal points toward the frame origin (offset > 0).
PlaneParams fit_plane_ransac(std::span<const Vec3> points, std::uint64_t seed,
                             const RansacParams& params = {},
                             std::vector<std::size_t>* inliers = nullptr);

/// T_text^C: origin at the left-edge midpoint, x toward the right-edge
/// midpoint, z along the plane normal.
Pose make_entity_pose(const CameraIntrinsics& k, const PlaneParams& plane,
                      const std::array<PixelPoint, 4>& quad);

struct AnchoredPose {
  std::size_t frame = 0;
  Pose pose;  // T_text^{L_i}
};

/// Anchors between two known bracketing LiDAR poses with factor
/// (t_image - t_i) / (t_k - t_i).
Pose anchor_between(const Pose& pose_in_cam, const CalibratedRig& rig, const OdometryFrame& frame_i,
                    const OdometryFrame& frame_k, double t_image);

/// Anchors into the latest odometry frame at or before t_image.
AnchoredPose anchor_entity(const Pose& pose_in_cam, const CalibratedRig& rig, double t_image,
                           std::span<const OdometryFrame> odometry);

/// Index of the latest frame with timestamp <= t, or npos if none.
inline constexpr std::size_t kNoFrame = static_cast<std::size_t>(-1);
std::size_t latest_frame_at_or_before(std::span<const OdometryFrame> odometry, double t);

/// ID-text recognizer; matching is case-insensitive on the full string.
class IdPattern {
 public:
  explicit IdPattern(const std::string& pattern);

  const std::string& pattern() const { return source_; }
  bool matches(const std::string& content) const;

 private:
  std::string source_;
  std::regex regex_;
};

inline constexpr const char* kDefaultIdPattern = R"([A-Z]\d+-[A-Z]\d+[A-Z]-[A-Z0-9]+)";

TextCategory classify_text(const std::string& content, const IdPattern& pattern);
TextCategory classify_text(const std::string& content, const std::string& pattern);

}  // namespace textlcd
