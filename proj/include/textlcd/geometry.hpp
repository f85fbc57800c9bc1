#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "textlcd/error.hpp"

namespace textlcd {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Rigid transform in SE(3). A pose T_a^b maps coordinates expressed in
/// frame a into frame b: p_b = R * p_a + t.
class Pose {
 public:
  Pose() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}
  Pose(const Mat3& rotation, const Vec3& translation)
      : rotation_(rotation), translation_(translation) {}
  Pose(const Eigen::Quaterniond& q, const Vec3& translation)
      : rotation_(q.normalized().toRotationMatrix()), translation_(translation) {}

  static Pose identity() { return Pose(); }
  static Pose from_translation(const Vec3& t) { return Pose(Mat3::Identity(), t); }

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  /// Unit quaternion with non-negative scalar part.
  Eigen::Quaterniond quaternion() const;

  Pose operator*(const Pose& other) const {
    return Pose(rotation_ * other.rotation_, rotation_ * other.translation_ + translation_);
  }
  Vec3 operator*(const Vec3& p) const { return rotation_ * p + translation_; }

  Pose inverse() const {
    Mat3 rt = rotation_.transpose();
    return Pose(rt, -(rt * translation_));
  }

  Eigen::Matrix4d matrix() const;

  /// Adjoint in the (translation, rotation) tangent layout.
  Mat6 adjoint() const;

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  Mat3 matrix() const;
  Mat3 inverse_matrix() const;
};

struct PlaneParams {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;

  double signed_distance(const Vec3& p) const { return normal.dot(p) + offset; }
};

struct PixelPoint {
  double u = 0.0;
  double v = 0.0;
};

inline constexpr double kDepthEpsilon = 1e-6;
inline constexpr double kRayParallelThreshold = 1e-9;
inline constexpr double kNearPiMargin = 1e-6;

Mat3 hat(const Vec3& v);

Mat3 so3_exp(const Vec3& phi);
/// Throws NearPiRotation when the rotation angle is within kNearPiMargin of pi.
Vec3 so3_log(const Mat3& rotation);
Mat3 so3_left_jacobian(const Vec3& phi);
Mat3 so3_left_jacobian_inverse(const Vec3& phi);

/// Tangent vectors use the layout [rho (translation part), phi (rotation)].
Pose exp_map(const Vec6& xi);
Vec6 log_map(const Pose& pose);

/// Left and right Jacobians of the SE(3) exponential and their inverses.
Mat6 se3_left_jacobian(const Vec6& xi);
Mat6 se3_right_jacobian_inverse(const Vec6& xi);

Vec3 transform_point(const Pose& pose, const Vec3& p);

PixelPoint project(const CameraIntrinsics& k, const Vec3& p_cam);

/// Depth along the optical axis of the pixel ray's intersection with the plane.
double depth_from_plane(const CameraIntrinsics& k, const PlaneParams& plane, const PixelPoint& px);

Vec3 backproject(const CameraIntrinsics& k, const PlaneParams& plane, const PixelPoint& px);

/// Geodesic interpolation between the identity and `pose`, s in [0, 1].
Pose interpolate(const Pose& pose, double s);

/// Frobenius-style distance between two poses: max of rotation and
/// translation component differences.
double pose_distance(const Pose& a, const Pose& b);

/// Rotation angle of a pose's rotational part, in radians.
double rotation_angle(const Mat3& rotation);

/// Project an approximately orthonormal matrix onto SO(3).
Mat3 orthonormalize(const Mat3& m);

}  // namespace textlcd
