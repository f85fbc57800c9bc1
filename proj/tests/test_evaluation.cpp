#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "textlcd/pipeline.hpp"

using namespace textlcd;

namespace {

std::vector<Pose> straight(std::size_t n) {
  std::vector<Pose> gt;
  for (std::size_t k = 0; k < n; ++k) gt.push_back(Pose::from_translation({0.1 * k, 0, 0}));
  return gt;
}

// Perimeter 40 m in 0.1 m steps, ending back at the start.
std::vector<Pose> square40() {
  std::vector<Pose> gt;
  const Vec3 corners[] = {{0, 0, 0}, {10, 0, 0}, {10, 10, 0}, {0, 10, 0}, {0, 0, 0}};
  for (int side = 0; side < 4; ++side) {
    for (int k = 0; k < 100; ++k) {
      gt.push_back(Pose::from_translation(corners[side] + 0.01 * k * (corners[side + 1] - corners[side])));
    }
  }
  gt.push_back(Pose());
  return gt;
}

std::vector<Pose> multifloor_gt() {
  const World w = build_world(Scenario::Multifloor, 0);
  SimulationParams params;
  params.lidar_rays = 0;
  NoiseModel noise = NoiseModel::noiseless();
  noise.detect_prob = 0.0;
  return simulate(w, w.route, default_rig(), noise, params, 0).ground_truth;
}

}  // namespace

TEST(Labels, StraightLineHasNoLoops) {
  const auto labels = label_loop_poses(straight(500), 1.0);
  EXPECT_EQ(labels.loop_pose_count(), 0u);
}

TEST(Labels, SquareClosesAtTheEnd) {
  const auto gt = square40();
  const auto labels = label_loop_poses(gt, 1.0);
  // Poses within 1 m of the start, more than 10 m of travel in.
  EXPECT_TRUE(labels.is_loop_pose.back());
  EXPECT_TRUE(labels.contains(gt.size() - 1, 0));
  EXPECT_FALSE(labels.is_loop_pose[200]);
  std::size_t expected = 0;
  for (std::size_t k = 0; k < gt.size(); ++k) {
    bool any = false;
    for (std::size_t p = 0; p < k; ++p) {
      any |= (gt[k].translation() - gt[p].translation()).norm() < 1.0 && 0.1 * (k - p) > 10.0;
    }
    expected += any;
  }
  EXPECT_EQ(labels.loop_pose_count(), expected);
  EXPECT_EQ(expected, 10u);
}

TEST(Labels, MatchBruteForce) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto gt = oracle::wandering_trajectory(seed, 1500);
    for (double tau : {1.0, 1.7}) {
      const auto labels = label_loop_poses(gt, tau);
      EXPECT_EQ(labels.neighbors, oracle::loop_neighbors(gt, tau, 10.0)) << seed << " " << tau;
    }
  }
}

TEST(Labels, MultifloorMatchesBruteForce) {
  const auto gt = multifloor_gt();
  const auto labels = label_loop_poses(gt, 1.7);
  EXPECT_EQ(labels.neighbors, oracle::loop_neighbors(gt, 1.7, 10.0));
  EXPECT_GT(labels.loop_pose_count(), 100u);
}

TEST(Score, NothingToScore) {
  const auto labels = label_loop_poses(straight(100), 1.0);
  const auto s = score({}, labels);
  EXPECT_FALSE(s.recall.has_value());
  EXPECT_FALSE(s.precision.has_value());
  EXPECT_EQ(s.tp + s.fp + s.fn, 0u);
}

TEST(Score, PerfectPredictions) {
  const auto gt = square40();
  const auto labels = label_loop_poses(gt, 1.0);
  std::vector<std::pair<std::size_t, std::size_t>> pred;
  for (std::size_t k = 0; k < gt.size(); ++k) {
    if (labels.is_loop_pose[k]) pred.emplace_back(k, labels.neighbors[k].front());
  }
  const auto s = score(pred, labels);
  EXPECT_DOUBLE_EQ(*s.recall, 1.0);
  EXPECT_DOUBLE_EQ(*s.precision, 1.0);
  EXPECT_EQ(s.fn, 0u);
}

TEST(Score, InjectedWrongFloorPrediction) {
  const auto gt = multifloor_gt();
  const auto labels = label_loop_poses(gt, 1.7);
  std::vector<std::pair<std::size_t, std::size_t>> pred;
  for (std::size_t k = 0; k < gt.size(); ++k) {
    if (labels.is_loop_pose[k]) pred.emplace_back(k, labels.neighbors[k].front());
  }
  const std::size_t tp = pred.size();
  // A second-floor pose that is not a loop pose, paired with the
  // first-floor pose directly below it.
  std::size_t k = 0, below = 0;
  double best = 1e9;
  for (k = 0; k < gt.size() && best >= 0.2; ++k) {
    if (gt[k].translation().z() < 4.0 || labels.is_loop_pose[k]) continue;
    for (std::size_t p = 0; p < k; ++p) {
      if (gt[p].translation().z() > 2.0) continue;
      const double d = (gt[p].translation() - gt[k].translation()).head<2>().norm();
      if (d < best) {
        best = d;
        below = p;
      }
    }
  }
  --k;
  ASSERT_LT(best, 0.2);
  pred.emplace_back(k, below);
  const auto s = score(pred, labels);
  EXPECT_EQ(s.tp, tp);
  EXPECT_EQ(s.fp, 1u);
  EXPECT_EQ(s.fn, 0u);
  EXPECT_DOUBLE_EQ(*s.precision, static_cast<double>(tp) / static_cast<double>(tp + 1));
  EXPECT_DOUBLE_EQ(*s.recall, 1.0);
}

TEST(Score, RandomPredictionsMatchHandCount) {
  std::mt19937_64 rng(9);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto gt = oracle::wandering_trajectory(seed, 800);
    const auto labels = label_loop_poses(gt, 1.0);
    std::uniform_int_distribution<std::size_t> frame(0, gt.size() - 1);
    std::vector<std::pair<std::size_t, std::size_t>> pred;
    for (std::size_t k = 0; k < gt.size(); ++k) {
      // Some correct, some random partners, several per pose at times.
      if (!labels.neighbors[k].empty() && rng() % 3 == 0) pred.emplace_back(k, labels.neighbors[k].back());
      if (rng() % 10 == 0) pred.emplace_back(k, frame(rng));
    }
    const auto s = score(pred, labels);
    const auto c = oracle::count(pred, oracle::loop_neighbors(gt, 1.0, 10.0));
    EXPECT_EQ(s.tp, c.tp);
    EXPECT_EQ(s.fp, c.fp);
    EXPECT_EQ(s.fn, c.fn);
  }
}

TEST(Score, FrameOutsideTrajectory) {
  const auto labels = label_loop_poses(straight(10), 1.0);
  const std::vector<std::pair<std::size_t, std::size_t>> pred = {{10, 0}};
  EXPECT_THROW(score(pred, labels), std::out_of_range);
}

TEST(Ate, IdenticalIsZero) {
  const auto gt = oracle::wandering_trajectory(1, 300);
  EXPECT_LT(ate(gt, gt).mean, 1e-12);
}

TEST(Ate, RigidTransformAbsorbed) {
  const auto gt = oracle::wandering_trajectory(2, 300);
  const Pose g(so3_exp(Vec3(0.4, -0.3, 2.0)), Vec3(10, -4, 3));
  std::vector<Pose> est;
  for (const auto& p : gt) est.push_back(g * p);
  EXPECT_LT(ate(est, gt).mean, 1e-9);
}

TEST(Ate, InvariantUnderRigidTransformOfEstimate) {
  const auto gt = oracle::wandering_trajectory(3, 300);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 0.2);
  std::vector<Pose> est, moved;
  const Pose g(so3_exp(Vec3(-1.0, 0.2, 0.7)), Vec3(-2, 5, 1));
  for (const auto& p : gt) {
    est.push_back(Pose::from_translation({n(rng), n(rng), n(rng)}) * p);
    moved.push_back(g * est.back());
  }
  EXPECT_NEAR(ate(est, gt).mean, ate(moved, gt).mean, 1e-9);
}

TEST(Ate, IsotropicNoiseMatchesExpectedNorm) {
  // E|n| for n ~ N(0, s^2 I3) is s * sqrt(8 / pi).
  const double sigma = 0.1;
  const double expected = sigma * std::sqrt(8.0 / M_PI);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto gt = oracle::wandering_trajectory(seed, 1000);
    std::mt19937_64 rng(100 + seed);
    std::normal_distribution<double> n(0.0, sigma);
    std::vector<Pose> est;
    for (const auto& p : gt) est.push_back(Pose::from_translation({n(rng), n(rng), n(rng)}) * p);
    sum += ate(est, gt).mean * static_cast<double>(gt.size());
    count += gt.size();
  }
  // Per-sample std of |n| is about 0.67 sigma; 4 standard errors.
  const double tol = 4 * 0.67 * sigma / std::sqrt(static_cast<double>(count));
  EXPECT_NEAR(sum / static_cast<double>(count), expected, tol);
}

TEST(Ate, LengthMismatch) {
  const auto gt = straight(10);
  try {
    ate(std::span<const Pose>(gt.data(), 9), gt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LengthMismatch);
  }
}

TEST(Report, FieldsAndNulls) {
  const auto gt = straight(50);
  const Json r = evaluate_run(gt, gt, {}, PipelineConfig{});
  for (const char* key : {"recall", "precision", "tp", "fp", "fn", "ate_mean", "ate_per_pose", "params"}) {
    EXPECT_TRUE(r.contains(key)) << key;
  }
  EXPECT_TRUE(r["recall"].is_null());
  EXPECT_TRUE(r["precision"].is_null());
  EXPECT_DOUBLE_EQ(r["ate_mean"].get<double>(), 0.0);
  EXPECT_EQ(r["ate_per_pose"].size(), 50u);
}
