#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "textlcd/log_io.hpp"

namespace textlcd {

/// Rectangle {origin + a*u + b*v : a in [0, width], b in [0, height]};
/// normal = u x v faces the walkable side.
struct Wall {
  Vec3 origin = Vec3::Zero();
  Vec3 u = Vec3::UnitX();
  Vec3 v = Vec3::UnitZ();
  double width = 1.0;
  double height = 1.0;

  Vec3 normal() const { return u.cross(v); }
  Vec3 point(double a, double b) const { return origin + a * u + b * v; }
};

struct Placement {
  std::string content;
  TextCategory category = TextCategory::Generic;
  std::size_t wall = 0;
  double a = 0.0;  // left-edge midpoint, wall coordinates
  double b = 0.0;
  double width = 0.4;
  double height = 0.15;
  int floor = 0;
};

enum class Scenario { Corridor, SemiOutdoor, Multifloor };

Scenario parse_scenario(const std::string& name);
const char* scenario_name(Scenario s);

struct Waypoint {
  Vec3 position = Vec3::Zero();  // LiDAR origin, world frame
  std::string leg;               // label of the leg ending here
};

struct World {
  Scenario scenario = Scenario::Corridor;
  std::vector<Wall> walls;
  std::vector<Placement> placements;
  int floors = 1;
  double floor_spacing = 3.5;
  std::vector<Waypoint> route;  // default route

  /// T_text^W: x along the text, y up, z out of the wall.
  Pose placement_pose(const Placement& p) const;
  /// Corners TL, TR, BR, BL in the world frame.
  std::array<Vec3, 4> placement_corners(const Placement& p) const;
  bool placement_within_wall(const Placement& p) const;
  bool contains(const Vec3& p) const;
};

World build_world(Scenario scenario, std::uint64_t seed);
Json world_to_json(const World& world);

struct NoiseModel {
  Vec6 odom_sigma = (Vec6() << 0.005, 0.005, 0.005, 5e-5, 5e-5, 1e-4).finished();
  double detect_prob = 0.8;
  double max_range = 8.0;
  double max_incidence = 1.3;  // rad
  double misread_prob = 0.05;
  double bbox_jitter = 0.5;    // px
  double cloud_sigma = 0.01;

  static NoiseModel noiseless();
};

struct SimulationParams {
  double rate = 10.0;
  double speed = 0.89;  // m/s
  double camera_offset = 0.05;
  std::size_t lidar_rays = 3000;
  double lidar_range = 20.0;
  double lidar_h_fov = 0.96;  // half angles, rad
  double lidar_v_fov = 0.52;
  int image_width = 640;
  int image_height = 480;
};

CalibratedRig default_rig();

struct RouteLeg {
  std::string label;
  std::size_t first_frame = 0;
  std::size_t last_frame = 0;
};

struct SimulationResult {
  std::vector<LogRecord> records;
  std::vector<Pose> ground_truth;
  std::vector<Pose> odometry;
  std::vector<RouteLeg> legs;
  std::size_t detections = 0;
  std::size_t misreads = 0;
};

/// Substitutes one visually confusable character; returns the input when
/// it has none.
std::string misread(const std::string& content, std::uint64_t pick);

SimulationResult simulate(const World& world, const std::vector<Waypoint>& route,
                          const CalibratedRig& rig, const NoiseModel& noise,
                          const SimulationParams& params, std::uint64_t seed);

}  // namespace textlcd
