#include "textlcd/geometry.hpp"

#include <cmath>
#include <string>

#include <Eigen/SVD>

namespace textlcd {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::RayParallelToPlane: return "RayParallelToPlane";
    case ErrorCode::NegativeDepth: return "NegativeDepth";
    case ErrorCode::OutOfRangeFactor: return "OutOfRangeFactor";
    case ErrorCode::NearPiRotation: return "NearPiRotation";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::DegenerateSample: return "DegenerateSample";
    case ErrorCode::LowInlierRatio: return "LowInlierRatio";
    case ErrorCode::DegenerateEdge: return "DegenerateEdge";
    case ErrorCode::UnbracketedTimestamp: return "UnbracketedTimestamp";
    case ErrorCode::InvalidPattern: return "InvalidPattern";
    case ErrorCode::SingularNormalEquations: return "SingularNormalEquations";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::WaypointOutsideWorld: return "WaypointOutsideWorld";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::MissingInput: return "MissingInput";
  }
  return "Unknown";
}

namespace {

// Below this angle the closed-form coefficients lose precision and the
// Taylor expansions are used instead.
constexpr double kSmallAngle = 1e-4;

}  // namespace

Eigen::Quaterniond Pose::quaternion() const {
  Eigen::Quaterniond q(rotation_);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() *= -1.0;
  return q;
}

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

Mat6 Pose::adjoint() const {
  Mat6 ad = Mat6::Zero();
  ad.topLeftCorner<3, 3>() = rotation_;
  ad.topRightCorner<3, 3>() = hat(translation_) * rotation_;
  ad.bottomRightCorner<3, 3>() = rotation_;
  return ad;
}

Mat3 CameraIntrinsics::matrix() const {
  Mat3 k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

Mat3 CameraIntrinsics::inverse_matrix() const {
  Mat3 k;
  k << 1.0 / fx, 0.0, -cx / fx, 0.0, 1.0 / fy, -cy / fy, 0.0, 0.0, 1.0;
  return k;
}

Mat3 hat(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

Mat3 so3_exp(const Vec3& phi) {
  const double theta2 = phi.squaredNorm();
  const double theta = std::sqrt(theta2);
  double a, b;
  if (theta < kSmallAngle) {
    a = 1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0;
    b = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  const Mat3 w = hat(phi);
  return Mat3::Identity() + a * w + b * w * w;
}

double rotation_angle(const Mat3& rotation) {
  const Vec3 axis(rotation(2, 1) - rotation(1, 2), rotation(0, 2) - rotation(2, 0),
                  rotation(1, 0) - rotation(0, 1));
  const double s = 0.5 * axis.norm();
  const double c = 0.5 * (rotation.trace() - 1.0);
  return std::atan2(s, c);
}

Vec3 so3_log(const Mat3& rotation) {
  const Vec3 axis(rotation(2, 1) - rotation(1, 2), rotation(0, 2) - rotation(2, 0),
                  rotation(1, 0) - rotation(0, 1));
  const double s = 0.5 * axis.norm();
  const double c = 0.5 * (rotation.trace() - 1.0);
  const double theta = std::atan2(s, c);
  if (theta > M_PI - kNearPiMargin) {
    throw Error(ErrorCode::NearPiRotation,
                "rotation angle " + std::to_string(theta) + " is at the log-map branch cut");
  }
  double factor;
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    factor = 0.5 * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0);
  } else {
    factor = 0.5 * theta / s;
  }
  return factor * axis;
}

Mat3 so3_left_jacobian(const Vec3& phi) {
  const double theta2 = phi.squaredNorm();
  const double theta = std::sqrt(theta2);
  double b, c;
  if (theta < kSmallAngle) {
    b = 0.5 - theta2 / 24.0;
    c = 1.0 / 6.0 - theta2 / 120.0;
  } else {
    b = (1.0 - std::cos(theta)) / theta2;
    c = (theta - std::sin(theta)) / (theta2 * theta);
  }
  const Mat3 w = hat(phi);
  return Mat3::Identity() + b * w + c * w * w;
}

Mat3 so3_left_jacobian_inverse(const Vec3& phi) {
  const double theta2 = phi.squaredNorm();
  const double theta = std::sqrt(theta2);
  double c;
  if (theta < kSmallAngle) {
    c = 1.0 / 12.0 + theta2 / 720.0;
  } else {
    c = 1.0 / theta2 - (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  }
  const Mat3 w = hat(phi);
  return Mat3::Identity() - 0.5 * w + c * w * w;
}

Pose exp_map(const Vec6& xi) {
  const Vec3 rho = xi.head<3>();
  const Vec3 phi = xi.tail<3>();
  return Pose(so3_exp(phi), so3_left_jacobian(phi) * rho);
}

Vec6 log_map(const Pose& pose) {
  const Vec3 phi = so3_log(pose.rotation());
  Vec6 xi;
  xi.head<3>() = so3_left_jacobian_inverse(phi) * pose.translation();
  xi.tail<3>() = phi;
  return xi;
}

namespace {

// Coupling block of the SE(3) left Jacobian.
Mat3 se3_q_matrix(const Vec3& rho, const Vec3& phi) {
  const double theta2 = phi.squaredNorm();
  const double theta = std::sqrt(theta2);
  double c1, c2, c3;
  if (theta < kSmallAngle) {
    c1 = 1.0 / 6.0 - theta2 / 120.0;
    c2 = 1.0 / 24.0 - theta2 / 720.0;
    c3 = 1.0 / 120.0 - theta2 / 2520.0;
  } else {
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    c1 = (theta - s) / (theta2 * theta);
    c2 = (theta2 + 2.0 * c - 2.0) / (2.0 * theta2 * theta2);
    c3 = (2.0 * theta - 3.0 * s + theta * c) / (2.0 * theta2 * theta2 * theta);
  }
  const Mat3 p = hat(phi);
  const Mat3 r = hat(rho);
  const Mat3 pr = p * r;
  const Mat3 rp = r * p;
  const Mat3 prp = pr * p;
  return 0.5 * r + c1 * (pr + rp + prp) + c2 * (p * pr + rp * p - 3.0 * prp) +
         c3 * (prp * p + p * prp);
}

}  // namespace

Mat6 se3_left_jacobian(const Vec6& xi) {
  const Vec3 rho = xi.head<3>();
  const Vec3 phi = xi.tail<3>();
  const Mat3 jl = so3_left_jacobian(phi);
  Mat6 j = Mat6::Zero();
  j.topLeftCorner<3, 3>() = jl;
  j.bottomRightCorner<3, 3>() = jl;
  j.topRightCorner<3, 3>() = se3_q_matrix(rho, phi);
  return j;
}

Mat6 se3_right_jacobian_inverse(const Vec6& xi) {
  // J_r(xi) = J_l(-xi).
  const Vec3 rho = -xi.head<3>();
  const Vec3 phi = -xi.tail<3>();
  const Mat3 jl_inv = so3_left_jacobian_inverse(phi);
  Mat6 j = Mat6::Zero();
  j.topLeftCorner<3, 3>() = jl_inv;
  j.bottomRightCorner<3, 3>() = jl_inv;
  j.topRightCorner<3, 3>() = -jl_inv * se3_q_matrix(rho, phi) * jl_inv;
  return j;
}

Vec3 transform_point(const Pose& pose, const Vec3& p) { return pose * p; }

PixelPoint project(const CameraIntrinsics& k, const Vec3& p_cam) {
  if (!(p_cam.z() > kDepthEpsilon)) {
    throw Error(ErrorCode::NonPositiveDepth,
                "point depth " + std::to_string(p_cam.z()) + " is not in front of the camera");
  }
  return {k.fx * p_cam.x() / p_cam.z() + k.cx, k.fy * p_cam.y() / p_cam.z() + k.cy};
}

namespace {

Vec3 normalized_ray(const CameraIntrinsics& k, const PixelPoint& px) {
  return Vec3((px.u - k.cx) / k.fx, (px.v - k.cy) / k.fy, 1.0);
}

}  // namespace

double depth_from_plane(const CameraIntrinsics& k, const PlaneParams& plane, const PixelPoint& px) {
  const double denom = plane.normal.dot(normalized_ray(k, px));
  if (std::abs(denom) <= kRayParallelThreshold) {
    throw Error(ErrorCode::RayParallelToPlane, "pixel ray is parallel to the plane");
  }
  const double depth = -plane.offset / denom;
  if (!(depth > 0.0)) {
    throw Error(ErrorCode::NegativeDepth,
                "plane intersects the pixel ray behind the camera (depth " +
                    std::to_string(depth) + ")");
  }
  return depth;
}

Vec3 backproject(const CameraIntrinsics& k, const PlaneParams& plane, const PixelPoint& px) {
  return depth_from_plane(k, plane, px) * normalized_ray(k, px);
}

Pose interpolate(const Pose& pose, double s) {
  if (!(s >= 0.0 && s <= 1.0)) {
    throw Error(ErrorCode::OutOfRangeFactor,
                "interpolation factor " + std::to_string(s) + " outside [0, 1]");
  }
  if (s == 0.0) return Pose::identity();
  if (s == 1.0) return pose;
  return exp_map(s * log_map(pose));
}

double pose_distance(const Pose& a, const Pose& b) {
  return std::max((a.rotation() - b.rotation()).norm(),
                  (a.translation() - b.translation()).norm());
}

Mat3 orthonormalize(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Mat3 u = svd.matrixU();
    u.col(2) *= -1.0;
    r = u * svd.matrixV().transpose();
  }
  return r;
}

}  // namespace textlcd
