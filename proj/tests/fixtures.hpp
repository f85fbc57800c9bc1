#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "textlcd/loop_closure.hpp"

namespace fixtures {

using namespace textlcd;

struct GraphInstance {
  Ltem m_c;
  Ltem m_p;
  std::vector<Association> associations;
  ConsistencyGraph graph;
};

inline LtemEntity entity(const std::string& content, const Vec3& position) {
  LtemEntity e;
  e.content = content;
  e.position = position;
  return e;
}

// Two noisy views of one text layout under a random rigid motion, with
// repeated contents and outliers; 2..12 putative associations.
inline GraphInstance random_graph(std::uint64_t seed, double epsilon = 0.5) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> n_contents(3, 6);
  std::uniform_int_distribution<int> copies(1, 2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.08);
  for (;;) {
    GraphInstance g;
    const double yaw = 6.283185307179586 * unit(rng);
    const Pose motion(Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix(),
                      Vec3(20.0 * unit(rng), 20.0 * unit(rng), 0.0));
    const auto random_point = [&] { return Vec3(10.0 * unit(rng), 4.0 * unit(rng), 3.0 * unit(rng)); };
    const int contents = n_contents(rng);
    for (int c = 0; c < contents; ++c) {
      const std::string name = "T" + std::to_string(c);
      const int np = copies(rng);
      const int nc = copies(rng);
      std::vector<Vec3> base;
      for (int k = 0; k < np; ++k) {
        base.push_back(random_point());
        g.m_p.entities.push_back(entity(name, base.back()));
      }
      for (int k = 0; k < nc; ++k) {
        Vec3 q;
        if (k < np && unit(rng) < 0.7) {
          q = motion * base[static_cast<std::size_t>(k)] + Vec3(noise(rng), noise(rng), noise(rng));
        } else {
          q = motion * random_point();
        }
        g.m_c.entities.push_back(entity(name, q));
      }
    }
    g.associations = putative_associations(g.m_c, g.m_p);
    if (g.associations.size() < 2 || g.associations.size() > 12) continue;
    g.graph = build_consistency_graph(g.associations, g.m_c, g.m_p, epsilon);
    return g;
  }
}

// Out-and-back odometry along x; frame 10 sees EXIT, DANGER and POWER and
// frame 189 sees them again from the same place on the way back. When
// `third_consistent` is false POWER appears 2 m away from its first place.
inline std::vector<LoopConstraint> gating_run(bool third_consistent) {
  std::vector<Pose> odometry;
  for (int k = 0; k < 200; ++k) {
    const int step = k < 100 ? k : 199 - k;
    odometry.push_back(Pose::from_translation(Vec3(0.1 * step, 0, 0)));
  }
  const auto text = [](const std::string& content, const Vec3& p) {
    TextEntity e;
    e.content = content;
    e.category = TextCategory::Generic;
    e.pose_in_anchor = Pose::from_translation(p);
    e.confidence = 0.9;
    return e;
  };
  const std::vector<TextEntity> first = {text("EXIT", {0.0, 1.2, 0.3}),
                                         text("DANGER", {1.5, -1.2, 0.3}),
                                         text("POWER", {3.0, 1.2, 0.3})};
  std::vector<TextEntity> again = first;
  if (!third_consistent) again[2].pose_in_anchor = Pose::from_translation(Vec3(5.0, 1.2, 0.3));

  LoopParams params;
  params.icp_refine = false;
  LoopDetector detector(params);
  std::vector<LoopConstraint> out;
  for (std::size_t k = 0; k < odometry.size(); ++k) {
    std::vector<TextEntity> entities;
    if (k == 10) entities = first;
    if (k == 189) entities = again;
    for (auto& e : entities) e.anchor_frame = k;
    const auto found = detector.process_frame(k, entities, std::span<const Pose>(odometry.data(), k + 1));
    out.insert(out.end(), found.begin(), found.end());
  }
  return out;
}

}  // namespace fixtures
