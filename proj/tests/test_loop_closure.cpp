#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "textlcd/loop_closure.hpp"

using namespace textlcd;

namespace {

// Points on the inside of a 6 x 4 x 3 room with a crate in one corner.
PointCloud room(std::uint64_t seed, std::size_t n = 3000) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> face(0, 6);
  PointCloud out;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = u(rng), b = u(rng);
    switch (face(rng)) {
      case 0: out.push_back({6 * a - 3, 4 * b - 2, 0}); break;
      case 1: out.push_back({6 * a - 3, -2, 3 * b}); break;
      case 2: out.push_back({6 * a - 3, 2, 3 * b}); break;
      case 3: out.push_back({-3, 4 * a - 2, 3 * b}); break;
      case 4: out.push_back({3, 4 * a - 2, 3 * b}); break;
      case 5: out.push_back({1.8 + 1.2 * a, 1.2 + 0.8 * b, 1.0}); break;
      default: out.push_back({1.8, 1.2 + 0.8 * a, b}); break;
    }
  }
  return out;
}

PointCloud moved(const PointCloud& cloud, const Pose& t) {
  PointCloud out;
  for (const auto& p : cloud) out.push_back(t * p);
  return out;
}

TextEntity text(const std::string& content, TextCategory category, const Pose& pose) {
  TextEntity e;
  e.content = content;
  e.category = category;
  e.pose_in_anchor = pose;
  e.confidence = 0.9;
  return e;
}

std::vector<Pose> out_and_back(int n) {
  std::vector<Pose> odo;
  for (int k = 0; k < n; ++k) {
    const int step = k < n / 2 ? k : n - 1 - k;
    odo.push_back(Pose::from_translation({0.1 * step, 0, 0}));
  }
  return odo;
}

}  // namespace

TEST(RelativePose, IdenticalEntitiesGiveIdentity) {
  const Pose t(so3_exp(Vec3(0.1, 0.2, 0.3)), Vec3(1, 2, 3));
  EXPECT_LT(pose_distance(relative_pose_from_entities(t, t), Pose()), 1e-15);
}

TEST(RelativePose, ShiftedEntity) {
  const Pose t_j(so3_exp(Vec3(0, 0, 0.4)), Vec3(2, 1, 0));
  const Pose t_i = Pose::from_translation({1, 0, 0}) * t_j;
  const Pose rel = relative_pose_from_entities(t_i, t_j);
  EXPECT_LT(pose_distance(rel, Pose::from_translation({1, 0, 0})), 1e-15);
}

TEST(Icp, IdenticalClouds) {
  const auto cloud = room(1);
  const auto r = icp_verify({0, cloud}, {1, cloud}, Pose());
  EXPECT_LT(pose_distance(r.refined, Pose()), 1e-12);
  EXPECT_DOUBLE_EQ(r.fitness, 1.0);
  EXPECT_LT(r.rms, 1e-12);
  EXPECT_TRUE(r.accepted);
}

TEST(Icp, RecoversKnownTransform) {
  const auto cloud = room(2);
  const Pose t(so3_exp(Vec3(0.02, -0.01, 0.3)), Vec3(0.6, -0.4, 0.05));
  // cloud_j = T * cloud_i, so cloud_i = T^-1 * cloud_j.
  const auto shifted = moved(cloud, t);
  const Pose truth = t.inverse();
  const Pose init = exp_map((Vec6() << 0.2, -0.15, 0.05, 0.02, 0.01, 0.06).finished()) * truth;
  IcpParams params;
  params.max_iterations = 200;
  params.convergence = 1e-10;
  const auto r = icp_verify({0, cloud}, {1, shifted}, init, params);
  EXPECT_LT((r.refined.translation() - truth.translation()).norm(), 1e-3);
  EXPECT_LT(rotation_angle(r.refined.rotation().transpose() * truth.rotation()), 0.1 * M_PI / 180);
  EXPECT_TRUE(r.accepted);
}

TEST(Icp, DisjointScenesRejected) {
  const auto a = room(3);
  PointCloud b;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 3000; ++i) b.push_back({8 * u(rng), 1.0 + 0.2 * u(rng), 5 + 4 * u(rng)});
  const auto r = icp_verify({0, a}, {1, b}, Pose());
  EXPECT_LT(r.fitness, 0.6);
  EXPECT_FALSE(r.accepted);
}

TEST(Icp, TooFewPoints) {
  const PointCloud few(10, Vec3::Zero());
  try {
    icp_verify({0, few}, {1, room(5)}, Pose());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooFewPoints);
  }
}

TEST(Information, Diagonal) {
  const Mat6 info = diagonal_information(0.1, 0.05);
  EXPECT_NEAR(info(0, 0), 100.0, 1e-9);
  EXPECT_NEAR(info(5, 5), 400.0, 1e-9);
  EXPECT_EQ(info(0, 1), 0.0);
}

TEST(Detector, NoPriorObservation) {
  LoopDetector detector;
  const auto odo = out_and_back(40);
  const std::vector<TextEntity> seen = {text("EXIT", TextCategory::Generic, Pose())};
  EXPECT_TRUE(detector.process_frame(5, seen, odo).empty());
}

TEST(Detector, IdRevisitWithOverlappingClouds) {
  const auto odo = out_and_back(200);
  const auto cloud = room(6);
  const auto world_to = [&](std::size_t f) { return odo[f].inverse(); };
  LoopParams params;
  LoopDetector detector(params, [&](std::size_t f) -> std::optional<PointCloud> {
    return moved(cloud, world_to(f));
  });
  const Pose sign_world = Pose(so3_exp(Vec3(0, 0, 0.5)), Vec3(1.5, 1.9, 1.4));
  std::vector<LoopConstraint> found;
  for (std::size_t k = 0; k < odo.size(); ++k) {
    std::vector<TextEntity> seen;
    if (k == 10 || k == 189) {
      seen.push_back(text("S1-B4C-14", TextCategory::ID, world_to(k) * sign_world));
    }
    const auto c = detector.process_frame(k, seen, std::span<const Pose>(odo.data(), k + 1));
    found.insert(found.end(), c.begin(), c.end());
  }
  ASSERT_EQ(found.size(), 1u);
  EXPECT_EQ(found[0].source, LoopSource::IDText);
  EXPECT_EQ(found[0].frame_i, 189u);
  EXPECT_EQ(found[0].frame_j, 10u);
  const Pose truth = odo[189].inverse() * odo[10];
  EXPECT_LT(pose_distance(found[0].relative_pose, truth), 1e-6);
  EXPECT_NEAR(found[0].information(0, 0), 100.0, 1e-9);
}

TEST(Detector, IdRevisitWithoutCloudOverlapRejected) {
  const auto odo = out_and_back(200);
  const auto cloud = room(7);
  LoopDetector detector({}, [&](std::size_t f) -> std::optional<PointCloud> {
    // The second visit sees a different room.
    return f < 100 ? cloud : moved(room(8, 3000), Pose::from_translation({0, 0, 6}));
  });
  std::vector<LoopConstraint> found;
  for (std::size_t k = 0; k < odo.size(); ++k) {
    std::vector<TextEntity> seen;
    if (k == 10 || k == 189) {
      seen.push_back(text("S1-B4C-14", TextCategory::ID, Pose::from_translation({1, 1, 1})));
    }
    const auto c = detector.process_frame(k, seen, std::span<const Pose>(odo.data(), k + 1));
    found.insert(found.end(), c.begin(), c.end());
  }
  EXPECT_TRUE(found.empty());
  EXPECT_EQ(detector.stats().icp_rejections, 1u);
}

TEST(Detector, ConsistentSetGating) {
  EXPECT_TRUE(fixtures::gating_run(false).empty());
  const auto three = fixtures::gating_run(true);
  ASSERT_EQ(three.size(), 1u);
  EXPECT_EQ(three[0].source, LoopSource::GenericText);
}

TEST(Detector, ShortTravelIgnored) {
  LoopParams params;
  params.icp_refine = false;
  LoopDetector detector(params);
  const auto odo = out_and_back(60);
  std::vector<LoopConstraint> found;
  for (std::size_t k = 0; k < odo.size(); ++k) {
    std::vector<TextEntity> seen;
    if (k == 5 || k == 54) seen.push_back(text("S1-B1A-01", TextCategory::ID, Pose()));
    const auto c = detector.process_frame(k, seen, std::span<const Pose>(odo.data(), k + 1));
    found.insert(found.end(), c.begin(), c.end());
  }
  EXPECT_TRUE(found.empty());
}

TEST(Detector, DriftGate) {
  // Odometry says the two sightings are 15 m apart; the text says 0 m.
  LoopParams params;
  params.icp_refine = false;
  std::vector<Pose> odo;
  for (int k = 0; k < 200; ++k) odo.push_back(Pose::from_translation({0.1 * k, 0, 0}));
  const auto run = [&](const LoopParams& p) {
    LoopDetector detector(p);
    std::size_t n = 0;
    for (std::size_t k = 0; k < odo.size(); ++k) {
      std::vector<TextEntity> seen;
      if (k == 10 || k == 160) seen.push_back(text("S1-B1A-01", TextCategory::ID, Pose()));
      n += detector.process_frame(k, seen, std::span<const Pose>(odo.data(), k + 1)).size();
    }
    return n;
  };
  EXPECT_EQ(run(params), 0u);
  params.drift_rate = 1.0;
  EXPECT_EQ(run(params), 1u);
}

TEST(Detector, EvaluateFrameIsIdempotent) {
  LoopParams params;
  params.icp_refine = false;
  params.cooldown_frames = 0;
  LoopDetector detector(params);
  const auto odo = out_and_back(200);
  const std::vector<TextEntity> first = {
      text("EXIT", TextCategory::Generic, Pose::from_translation({0, 1.2, 0.3})),
      text("DANGER", TextCategory::Generic, Pose::from_translation({1.5, -1.2, 0.3})),
      text("POWER", TextCategory::Generic, Pose::from_translation({3, 1.2, 0.3}))};
  for (std::size_t k = 0; k < 189; ++k) {
    detector.process_frame(k, k == 10 ? first : std::vector<TextEntity>{},
                           std::span<const Pose>(odo.data(), k + 1));
  }
  const auto recorded = detector.process_frame(189, first, odo);
  const auto a = detector.evaluate_frame(189, odo);
  const auto b = detector.evaluate_frame(189, odo);
  ASSERT_FALSE(recorded.empty());
  ASSERT_EQ(a.size(), recorded.size());
  ASSERT_EQ(b.size(), recorded.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(constraint_to_json(a[i]).dump(), constraint_to_json(recorded[i]).dump());
    EXPECT_EQ(constraint_to_json(b[i]).dump(), constraint_to_json(recorded[i]).dump());
  }
}

TEST(ConstraintJson, RoundTrip) {
  LoopConstraint c;
  c.frame_i = 40;
  c.frame_j = 3;
  c.relative_pose = Pose(so3_exp(Vec3(0.1, 0, 0.2)), Vec3(0.5, 0.1, 0));
  c.information = diagonal_information(0.2, 0.1);
  c.source = LoopSource::IDText;
  const auto back = constraint_from_json(constraint_to_json(c));
  EXPECT_EQ(back.frame_i, 40u);
  EXPECT_EQ(back.frame_j, 3u);
  EXPECT_LT(pose_distance(back.relative_pose, c.relative_pose), 1e-12);
  EXPECT_TRUE(back.information.isApprox(c.information));
  EXPECT_EQ(back.source, LoopSource::IDText);
  EXPECT_THROW(constraint_from_json(Json{{"i", 1}}), std::exception);
}
