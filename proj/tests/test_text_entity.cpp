#include <random>

#include <gtest/gtest.h>

#include "textlcd/text_entity.hpp"

using namespace textlcd;

namespace {

const CameraIntrinsics kCam{500, 500, 320, 240};

std::array<PixelPoint, 4> box(double u0, double v0, double u1, double v1) {
  return {PixelPoint{u0, v0}, PixelPoint{u1, v0}, PixelPoint{u1, v1}, PixelPoint{u0, v1}};
}

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::MissingInput;
}

Pose twist_pose(const Vec6& xi, double t) { return exp_map(t * xi); }

}  // namespace

TEST(Normalize, TrimsAndUppercases) {
  EXPECT_EQ(normalize_content("  exit \n"), "EXIT");
  EXPECT_EQ(normalize_content("   "), "");
  EXPECT_EQ(normalize_content("S1-b4c-14"), "S1-B4C-14");
}

TEST(LocalCloud, SingleFrameUnchanged) {
  const LidarFrame f{0.5, Pose::from_translation({3, 1, 0}), {{1, 2, 3}, {4, 5, 6}}};
  const auto cloud = accumulate_local_cloud(std::span(&f, 1), 0.5, 1.0);
  ASSERT_EQ(cloud.size(), 2u);
  EXPECT_TRUE(cloud[0].isApprox(Vec3(1, 2, 3)));
  EXPECT_TRUE(cloud[1].isApprox(Vec3(4, 5, 6)));
}

TEST(LocalCloud, TranslatedFrame) {
  const std::vector<LidarFrame> frames = {{0.0, Pose(), {{2, 0, 0}}},
                                          {0.1, Pose::from_translation({1, 0, 0}), {}}};
  const auto cloud = accumulate_local_cloud(frames, 0.1, 1.0);
  ASSERT_EQ(cloud.size(), 1u);
  EXPECT_TRUE(cloud[0].isApprox(Vec3(1, 0, 0)));
}

TEST(LocalCloud, MatchesWorldOracle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::vector<Vec3> world;
  for (int i = 0; i < 200; ++i) world.push_back({u(rng), u(rng), u(rng)});
  Vec6 xi;
  xi << 0.9, 0.05, 0.0, 0.0, 0.0, 0.2;
  std::vector<LidarFrame> frames;
  for (int k = 0; k < 10; ++k) {
    LidarFrame f{0.1 * k, twist_pose(xi, 0.1 * k), {}};
    for (int i = 20 * k; i < 20 * k + 20; ++i) f.points.push_back(f.pose.inverse() * world[i]);
    frames.push_back(f);
  }
  const auto cloud = accumulate_local_cloud(frames, 0.9, 1.0);
  ASSERT_EQ(cloud.size(), 200u);
  const Pose ref = frames.back().pose.inverse();
  for (std::size_t i = 0; i < 200; ++i) EXPECT_LT((cloud[i] - ref * world[i]).norm(), 1e-9);
}

TEST(LocalCloud, WindowExcludesOldFrames) {
  const std::vector<LidarFrame> frames = {{0.0, Pose(), {{1, 0, 0}}}, {2.0, Pose(), {{2, 0, 0}}}};
  EXPECT_EQ(accumulate_local_cloud(frames, 2.0, 1.0).size(), 1u);
  EXPECT_EQ(code_of([&] { accumulate_local_cloud(frames, 5.0, 1.0); }), ErrorCode::EmptyWindow);
}

TEST(Region, BehindCameraIsEmpty) {
  const std::vector<Vec3> cloud = {{0, 0, -1}, {0.1, 0.1, -3}};
  EXPECT_TRUE(points_in_region(cloud, kCam, box(0, 0, 640, 480)).empty());
}

TEST(Region, PointInsideBox) {
  // Projects to (150, 150).
  const Vec3 p((150 - 320) / 500.0 * 2, (150 - 240) / 500.0 * 2, 2);
  const std::vector<Vec3> cloud = {p};
  EXPECT_EQ(points_in_region(cloud, kCam, box(100, 100, 200, 200)).size(), 1u);
}

TEST(Region, MatchesPerPointCheck) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const auto quad = box(200, 150, 420, 330);
  std::vector<Vec3> cloud;
  for (int i = 0; i < 1000; ++i) cloud.push_back({u(rng), u(rng), 4.0});
  std::vector<Vec3> expected;
  for (const auto& p : cloud) {
    const double pu = 500 * p.x() / p.z() + 320, pv = 500 * p.y() / p.z() + 240;
    if (pu >= 200 && pu <= 420 && pv >= 150 && pv <= 330) expected.push_back(p);
  }
  const auto got = points_in_region(cloud, kCam, quad);
  ASSERT_EQ(got.size(), expected.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i], expected[i]);
  EXPECT_GT(expected.size(), 100u);
  EXPECT_LT(expected.size(), 900u);
}

TEST(PointInQuad, BoundaryInclusive) {
  const auto q = box(0, 0, 10, 10);
  EXPECT_TRUE(point_in_quad(q, {0, 5}));
  EXPECT_TRUE(point_in_quad(q, {10, 10}));
  EXPECT_FALSE(point_in_quad(q, {10.001, 5}));
}

TEST(Ransac, NoiselessPlane) {
  std::vector<Vec3> pts;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) pts.push_back({0.1 * i - 0.5, 0.1 * j - 0.5, 5.0});
  }
  const auto plane = fit_plane_ransac(pts, 1);
  EXPECT_LT((plane.normal - Vec3(0, 0, -1)).norm(), 1e-12);
  EXPECT_NEAR(plane.offset, 5.0, 1e-12);
  for (const auto& p : pts) EXPECT_LT(std::abs(plane.signed_distance(p)), 1e-12);
}

TEST(Ransac, OutliersRejected) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::vector<Vec3> pts;
  for (int i = 0; i < 160; ++i) pts.push_back({u(rng), u(rng), 5.0});
  for (int i = 0; i < 40; ++i) pts.push_back({u(rng), u(rng), 5.0 + u(rng)});
  std::vector<std::size_t> inliers;
  const auto plane = fit_plane_ransac(pts, 2, {}, &inliers);
  // Stray outliers inside the threshold tilt the refit slightly.
  EXPECT_LT((plane.normal - Vec3(0, 0, -1)).norm(), 0.01);
  EXPECT_NEAR(plane.offset, 5.0, RansacParams{}.inlier_threshold);
  for (std::size_t i = 0; i < 160; ++i) {
    EXPECT_NE(std::find(inliers.begin(), inliers.end(), i), inliers.end());
  }
  for (auto i : inliers) {
    EXPECT_LE(std::abs(plane.signed_distance(pts[i])), RansacParams{}.inlier_threshold);
  }
}

TEST(Ransac, TooFewPoints) {
  std::vector<Vec3> pts(10, Vec3(0, 0, 5));
  EXPECT_EQ(code_of([&] { fit_plane_ransac(pts, 1); }), ErrorCode::TooFewPoints);
}

TEST(Ransac, CollinearSamples) {
  std::vector<Vec3> pts;
  for (int i = 0; i < 50; ++i) pts.push_back({0.1 * i, 0, 5});
  EXPECT_EQ(code_of([&] { fit_plane_ransac(pts, 1); }), ErrorCode::DegenerateSample);
}

TEST(EntityPose, FrontalPlaneByHand) {
  const CameraIntrinsics k{1, 1, 0, 0};
  const PlaneParams plane{{0, 0, -1}, 5};
  const auto quad = box(0.0, -0.02, 0.2, 0.02);
  const Pose pose = make_entity_pose(k, plane, quad);
  Mat3 expected;
  expected.col(0) = Vec3(1, 0, 0);
  expected.col(1) = Vec3(0, -1, 0);
  expected.col(2) = Vec3(0, 0, -1);
  EXPECT_LT((pose.rotation() - expected).norm(), 1e-15);
  EXPECT_TRUE(pose.translation().isApprox(Vec3(0, 0, 5)));
  EXPECT_NEAR(pose.rotation().determinant(), 1.0, 1e-15);
}

TEST(EntityPose, DegenerateQuad) {
  const std::array<PixelPoint, 4> point{PixelPoint{300, 200}, PixelPoint{300, 200},
                                        PixelPoint{300, 200}, PixelPoint{300, 200}};
  EXPECT_EQ(code_of([&] { make_entity_pose(kCam, {{0, 0, -1}, 3}, point); }),
            ErrorCode::DegenerateEdge);
}

TEST(EntityPose, RandomTiltedPlanes) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const PlaneParams plane{Vec3(0.5 * u(rng), 0.5 * u(rng), -1).normalized(), 3 + u(rng)};
    const double u0 = 250 + 50 * u(rng), v0 = 200 + 40 * u(rng);
    const auto quad = box(u0, v0, u0 + 60 + 20 * u(rng), v0 + 20);
    const Pose pose = make_entity_pose(kCam, plane, quad);
    EXPECT_TRUE((pose.rotation().transpose() * pose.rotation()).isIdentity(1e-12));
    EXPECT_NEAR(pose.rotation().determinant(), 1.0, 1e-12);
    EXPECT_LT((pose.rotation().col(2) - plane.normal).norm(), 1e-12);
    EXPECT_LT(std::abs(plane.signed_distance(pose.translation())), 1e-9);
  }
}

TEST(Anchor, AtFrameTimestamp) {
  CalibratedRig rig;
  rig.extrinsic_cam_in_lidar = Pose(so3_exp(Vec3(0.1, 0.2, 0.3)), Vec3(0.1, 0, 0.05));
  const Pose in_cam(so3_exp(Vec3(0, 0.3, 0)), Vec3(0.5, 0.2, 3));
  const std::vector<OdometryFrame> odo = {{0.0, Pose()}, {0.1, Pose::from_translation({0.1, 0, 0})}};
  const auto a = anchor_entity(in_cam, rig, 0.0, odo);
  EXPECT_EQ(a.frame, 0u);
  EXPECT_LT(pose_distance(a.pose, rig.extrinsic_cam_in_lidar * in_cam), 1e-15);
}

TEST(Anchor, FullFactorUsesWholeMotion) {
  CalibratedRig rig;
  const Pose in_cam = Pose::from_translation({0, 0, 2});
  const OdometryFrame i{0.0, Pose()}, k{0.1, Pose(so3_exp(Vec3(0, 0, 0.2)), Vec3(0.1, 0, 0))};
  const Pose anchored = anchor_between(in_cam, rig, i, k, 0.1);
  EXPECT_LT(pose_distance(anchored, i.pose.inverse() * k.pose * in_cam), 1e-12);
}

TEST(Anchor, ConstantVelocityMidpoint) {
  Vec6 xi;
  xi << 0.9, 0.1, 0.02, 0.01, -0.02, 0.4;
  CalibratedRig rig;
  rig.extrinsic_cam_in_lidar = Pose(so3_exp(Vec3(-1.2, 0.0, -1.5)), Vec3(0.1, 0, 0.05));
  const Pose in_cam(so3_exp(Vec3(0.2, -0.1, 0.05)), Vec3(-0.3, 0.1, 2.5));
  std::vector<OdometryFrame> odo;
  for (int k = 0; k < 5; ++k) odo.push_back({0.1 * k, twist_pose(xi, 0.1 * k)});
  const double t = 0.237;
  const auto a = anchor_entity(in_cam, rig, t, odo);
  EXPECT_EQ(a.frame, 2u);
  const Pose truth = odo[2].pose.inverse() * twist_pose(xi, t) * rig.extrinsic_cam_in_lidar * in_cam;
  EXPECT_LT((a.pose.translation() - truth.translation()).norm(), 1e-6);
  EXPECT_LT(pose_distance(a.pose, truth), 1e-9);
}

TEST(Anchor, Unbracketed) {
  const std::vector<OdometryFrame> odo = {{1.0, Pose()}, {1.1, Pose()}};
  EXPECT_EQ(code_of([&] { anchor_entity(Pose(), {}, 0.5, odo); }), ErrorCode::UnbracketedTimestamp);
  EXPECT_EQ(code_of([&] { anchor_entity(Pose(), {}, 1.5, odo); }), ErrorCode::UnbracketedTimestamp);
}

TEST(Classify, IdAndGeneric) {
  const IdPattern pattern(kDefaultIdPattern);
  EXPECT_EQ(classify_text("S1-B4c-14", pattern), TextCategory::ID);
  EXPECT_EQ(classify_text("S1-B2A-05", pattern), TextCategory::ID);
  EXPECT_EQ(classify_text("EXIT", pattern), TextCategory::Generic);
  EXPECT_EQ(classify_text("", pattern), TextCategory::Generic);
  EXPECT_EQ(classify_text("S1-B4C-14 EXIT", pattern), TextCategory::Generic);
}

TEST(Classify, InvalidPattern) {
  EXPECT_EQ(code_of([] { IdPattern p("([A-Z"); }), ErrorCode::InvalidPattern);
}
