#include "textlcd/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace textlcd {

namespace {

constexpr double kWallHeight = 3.0;
constexpr double kSensorHeight = 1.2;

const std::vector<std::string> kVocabulary = {
    "EXIT",      "DANGER",     "POWER",      "NO SMOKING",      "KEEP CLEAR",
    "PUSH",      "PULL",       "FIRE HOSE",  "AUTHORIZED ONLY", "WET FLOOR"};

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t frame, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(frame), static_cast<std::uint32_t>(frame >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

struct WallSpec {
  Wall wall;
  char section = 0;  // 0 = carries no text
  bool ids = true;
};

// Vertical wall between two floor-plan points, facing `normal`.
Wall vertical_wall(Vec3 p0, Vec3 p1, double z0, double height, const Vec3& normal) {
  const Vec3 u = Vec3::UnitZ().cross(normal).normalized();
  p0.z() = z0;
  p1.z() = z0;
  if ((p1 - p0).dot(u) < 0.0) std::swap(p0, p1);
  Wall w;
  w.origin = p0;
  w.u = u;
  w.v = Vec3::UnitZ();
  w.width = (p1 - p0).norm();
  w.height = height;
  return w;
}

Wall slab(double x0, double x1, double y0, double y1, double z, bool up) {
  Wall w;
  w.origin = Vec3(x0, y0, z);
  if (up) {
    w.u = Vec3::UnitX();
    w.v = Vec3::UnitY();
    w.width = x1 - x0;
    w.height = y1 - y0;
  } else {
    w.u = Vec3::UnitY();
    w.v = Vec3::UnitX();
    w.width = y1 - y0;
    w.height = x1 - x0;
  }
  return w;
}

std::vector<WallSpec> ring_floor(double z0, bool stair_opening) {
  std::vector<WallSpec> out;
  const double h = kWallHeight;
  out.push_back({vertical_wall({0, 0, 0}, {24, 0, 0}, z0, h, Vec3::UnitY()), 'A'});
  out.push_back({vertical_wall({2.5, 2.5, 0}, {21.5, 2.5, 0}, z0, h, -Vec3::UnitY()), 'A'});
  if (stair_opening) {
    out.push_back({vertical_wall({24, 2.5, 0}, {24, 10, 0}, z0, h, -Vec3::UnitX()), 'B'});
  } else {
    out.push_back({vertical_wall({24, 0, 0}, {24, 10, 0}, z0, h, -Vec3::UnitX()), 'B'});
  }
  out.push_back({vertical_wall({21.5, 2.5, 0}, {21.5, 7.5, 0}, z0, h, Vec3::UnitX()), 'B'});
  out.push_back({vertical_wall({0, 10, 0}, {24, 10, 0}, z0, h, -Vec3::UnitY()), 'C'});
  out.push_back({vertical_wall({2.5, 7.5, 0}, {21.5, 7.5, 0}, z0, h, Vec3::UnitY()), 'C'});
  out.push_back({vertical_wall({0, 0, 0}, {0, 10, 0}, z0, h, Vec3::UnitX()), 'D'});
  out.push_back({vertical_wall({2.5, 2.5, 0}, {2.5, 7.5, 0}, z0, h, -Vec3::UnitX()), 'D'});
  const double rects[4][4] = {{0, 24, 0, 2.5}, {0, 24, 7.5, 10}, {21.5, 24, 2.5, 7.5},
                              {0, 2.5, 2.5, 7.5}};
  for (const auto& r : rects) {
    out.push_back({slab(r[0], r[1], r[2], r[3], z0, true), 0});
    out.push_back({slab(r[0], r[1], r[2], r[3], z0 + h, false), 0});
  }
  return out;
}

std::vector<WallSpec> semi_outdoor_walls() {
  std::vector<WallSpec> out;
  const double h = 6.0;
  out.push_back({vertical_wall({0, 0, 0}, {30, 0, 0}, 0, h, -Vec3::UnitY()), 'A'});
  out.push_back({vertical_wall({30, 0, 0}, {30, 15, 0}, 0, h, Vec3::UnitX()), 'B'});
  out.push_back({vertical_wall({0, 15, 0}, {30, 15, 0}, 0, h, Vec3::UnitY()), 'C'});
  out.push_back({vertical_wall({0, 0, 0}, {0, 15, 0}, 0, h, -Vec3::UnitX()), 'D'});
  out.push_back({vertical_wall({-5, -5, 0}, {35, -5, 0}, 0, 2.0, Vec3::UnitY()), 'A', false});
  out.push_back({vertical_wall({35, -5, 0}, {35, 20, 0}, 0, 2.0, -Vec3::UnitX()), 'B', false});
  out.push_back({slab(-6, 36, -6, 21, 0, true), 0});
  return out;
}

struct Slot {
  std::size_t wall;  // index within the floor's wall list
  double a;
  double b;
  bool id;
  std::size_t word;
};

std::vector<Slot> layout(const std::vector<WallSpec>& walls, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> word(0, kVocabulary.size() - 1);
  std::uniform_real_distribution<double> jitter(-0.5, 0.5);
  std::uniform_real_distribution<double> lift(-0.1, 0.1);

  std::vector<Slot> slots;
  for (std::size_t w = 0; w < walls.size(); ++w) {
    if (!walls[w].section) continue;
    const double width = walls[w].wall.width;
    std::size_t previous = kVocabulary.size();
    for (double a = 1.0; a + 0.4 <= width - 0.6; a += 3.0) {
      std::size_t pick = word(rng);
      while (pick == previous) pick = word(rng);
      previous = pick;
      slots.push_back({w, a + jitter(rng), 1.6 + lift(rng), false, pick});
    }
    if (!walls[w].ids) continue;
    for (double a = 2.5; a + 0.4 <= width - 0.6; a += 6.0) {
      slots.push_back({w, a + 0.6 * jitter(rng), 1.35 + lift(rng), true, 0});
    }
  }
  for (auto& s : slots) s.a = std::clamp(s.a, 0.05, walls[s.wall].wall.width - 0.45);
  return slots;
}

std::string id_text(int floor, char section, int number) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "S1-B%d%c-%02d", floor + 1, section, number);
  return buf;
}

void add_floor_texts(World& world, const std::vector<WallSpec>& walls, std::size_t wall_offset,
                     const std::vector<Slot>& slots, int floor) {
  std::map<char, int> counters;
  for (const auto& s : slots) {
    Placement p;
    p.wall = wall_offset + s.wall;
    p.a = s.a;
    p.b = s.b;
    p.floor = floor;
    if (s.id) {
      const char section = walls[s.wall].section;
      p.content = id_text(floor, section, ++counters[section]);
      p.category = TextCategory::ID;
    } else {
      p.content = kVocabulary[s.word];
      p.category = TextCategory::Generic;
    }
    world.placements.push_back(p);
  }
}

Vec3 at_height(double x, double y, double z) { return Vec3(x, y, z + kSensorHeight); }

bool intersect(const Wall& w, const Vec3& origin, const Vec3& dir, double& t) {
  const Vec3 n = w.normal();
  const double denom = n.dot(dir);
  if (std::abs(denom) < 1e-12) return false;
  const double s = n.dot(w.origin - origin) / denom;
  if (!(s > 1e-9)) return false;
  const Vec3 q = origin + s * dir - w.origin;
  const double a = q.dot(w.u);
  const double b = q.dot(w.v);
  if (a < 0.0 || a > w.width || b < 0.0 || b > w.height) return false;
  t = s;
  return true;
}

double distance_to_wall(const Wall& w, const Vec3& p) {
  const Vec3 d = p - w.origin;
  const double a = std::clamp(d.dot(w.u), 0.0, w.width);
  const double b = std::clamp(d.dot(w.v), 0.0, w.height);
  return (w.point(a, b) - p).norm();
}

bool segment_blocked(const World& world, std::span<const std::size_t> walls, std::size_t skip,
                     const Vec3& from, const Vec3& to) {
  const Vec3 d = to - from;
  for (auto w : walls) {
    if (w == skip) continue;
    double t = 0.0;
    if (intersect(world.walls[w], from, d, t) && t < 1.0 - 1e-9) return true;
  }
  return false;
}

struct Trajectory {
  std::vector<Pose> poses;
  std::vector<std::size_t> segment;  // polyline segment of each frame
};

Trajectory sample_route(const std::vector<Waypoint>& route, double step) {
  std::vector<double> cum(route.size(), 0.0);
  for (std::size_t k = 1; k < route.size(); ++k) {
    cum[k] = cum[k - 1] + (route[k].position - route[k - 1].position).norm();
  }
  const double total = cum.back();
  const auto locate = [&](double s, std::size_t* seg) {
    s = std::clamp(s, 0.0, total);
    std::size_t k = static_cast<std::size_t>(
        std::upper_bound(cum.begin(), cum.end(), s) - cum.begin());
    k = std::clamp<std::size_t>(k, 1, route.size() - 1);
    while (k > 1 && cum[k] - cum[k - 1] <= 0.0) --k;
    if (seg) *seg = k - 1;
    const double len = cum[k] - cum[k - 1];
    const double f = len > 0.0 ? (s - cum[k - 1]) / len : 0.0;
    return Vec3(route[k - 1].position + f * (route[k].position - route[k - 1].position));
  };

  Trajectory traj;
  const auto frames = static_cast<std::size_t>(std::floor(total / step + 1e-9)) + 1;
  double yaw = 0.0;
  for (std::size_t k = 0; k < frames; ++k) {
    const double s = static_cast<double>(k) * step;
    std::size_t seg = 0;
    const Vec3 p = locate(s, &seg);
    const Vec3 d = locate(s + 1.0, nullptr) - locate(s - 1.0, nullptr);
    if (std::hypot(d.x(), d.y()) > 1e-9) yaw = std::atan2(d.y(), d.x());
    traj.poses.emplace_back(Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix(), p);
    traj.segment.push_back(seg);
  }
  return traj;
}

}  // namespace

Scenario parse_scenario(const std::string& name) {
  if (name == "corridor") return Scenario::Corridor;
  if (name == "semi_outdoor") return Scenario::SemiOutdoor;
  if (name == "multifloor") return Scenario::Multifloor;
  throw Error(ErrorCode::ConfigError,
              "unknown scenario '" + name + "' (expected corridor, semi_outdoor or multifloor)");
}

const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::Corridor: return "corridor";
    case Scenario::SemiOutdoor: return "semi_outdoor";
    case Scenario::Multifloor: return "multifloor";
  }
  return "unknown";
}

Pose World::placement_pose(const Placement& p) const {
  const Wall& w = walls.at(p.wall);
  Mat3 r;
  r.col(0) = w.u;
  r.col(1) = w.v;
  r.col(2) = w.normal();
  return Pose(r, w.point(p.a, p.b));
}

std::array<Vec3, 4> World::placement_corners(const Placement& p) const {
  const Wall& w = walls.at(p.wall);
  const double hh = 0.5 * p.height;
  return {w.point(p.a, p.b + hh), w.point(p.a + p.width, p.b + hh),
          w.point(p.a + p.width, p.b - hh), w.point(p.a, p.b - hh)};
}

bool World::placement_within_wall(const Placement& p) const {
  if (p.wall >= walls.size()) return false;
  const Wall& w = walls[p.wall];
  const double hh = 0.5 * p.height;
  return p.a >= 0.0 && p.a + p.width <= w.width && p.b - hh >= 0.0 && p.b + hh <= w.height;
}

bool World::contains(const Vec3& p) const {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const auto& w : walls) {
    for (const Vec3& c : {w.point(0, 0), w.point(w.width, 0), w.point(0, w.height),
                          w.point(w.width, w.height)}) {
      lo = lo.cwiseMin(c);
      hi = hi.cwiseMax(c);
    }
  }
  return (p.array() >= lo.array() - 0.5).all() && (p.array() <= hi.array() + 0.5).all();
}

World build_world(Scenario scenario, std::uint64_t seed) {
  World world;
  world.scenario = scenario;
  std::mt19937_64 rng(seed);

  if (scenario == Scenario::SemiOutdoor) {
    const auto walls = semi_outdoor_walls();
    for (const auto& w : walls) world.walls.push_back(w.wall);
    add_floor_texts(world, walls, 0, layout(walls, rng), 0);
    world.route = {{at_height(-2.5, -2.5, 0), "A"},  {at_height(32.5, -2.5, 0), "A"},
                   {at_height(32.5, 17.5, 0), "B"},  {at_height(-2.5, 17.5, 0), "C"},
                   {at_height(-2.5, -2.5, 0), "D"},  {at_height(32.5, -2.5, 0), "A"}};
    return world;
  }

  const bool multifloor = scenario == Scenario::Multifloor;
  world.floors = multifloor ? 2 : 1;
  const auto template_walls = ring_floor(0.0, multifloor);
  const auto slots = layout(template_walls, rng);
  for (int f = 0; f < world.floors; ++f) {
    const auto walls = ring_floor(f * world.floor_spacing, multifloor);
    const std::size_t offset = world.walls.size();
    for (const auto& w : walls) world.walls.push_back(w.wall);
    add_floor_texts(world, walls, offset, slots, f);
  }

  const double z1 = 0.0;
  world.route = {{at_height(2.0, 1.25, z1), "F1-A"},   {at_height(22.75, 1.25, z1), "F1-A"},
                 {at_height(22.75, 8.75, z1), "F1-B"}, {at_height(1.25, 8.75, z1), "F1-C"},
                 {at_height(1.25, 1.25, z1), "F1-D"},  {at_height(22.75, 1.25, z1), "F1-A"}};
  if (!multifloor) return world;

  const double top = 2.0 * world.floor_spacing;
  const double z2 = world.floor_spacing;
  world.walls.push_back(vertical_wall({24, 0, 0}, {36, 0, 0}, 0.0, top, Vec3::UnitY()));
  world.walls.push_back(vertical_wall({24, 2.5, 0}, {36, 2.5, 0}, 0.0, top, -Vec3::UnitY()));
  world.walls.push_back(vertical_wall({36, 0, 0}, {36, 2.5, 0}, 0.0, top, -Vec3::UnitX()));
  const std::vector<Waypoint> rest = {
      {at_height(24.0, 0.75, 0.0), "STAIRS"},       {at_height(34.0, 0.75, 0.5 * z2), "STAIRS"},
      {at_height(34.75, 1.25, 0.5 * z2), "STAIRS"}, {at_height(34.0, 1.75, 0.5 * z2), "STAIRS"},
      {at_height(24.0, 1.75, z2), "STAIRS"},        {at_height(22.75, 1.75, z2), "STAIRS"},
      {at_height(22.75, 8.75, z2), "F2-B"},         {at_height(1.25, 8.75, z2), "F2-C"},
      {at_height(1.25, 1.25, z2), "F2-D"},          {at_height(22.75, 1.25, z2), "F2-A"},
      {at_height(22.75, 8.75, z2), "F2-B"},         {at_height(12.0, 8.75, z2), "F2-C"}};
  world.route.insert(world.route.end(), rest.begin(), rest.end());
  return world;
}

Json world_to_json(const World& world) {
  const auto vec = [](const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); };
  Json walls = Json::array();
  for (const auto& w : world.walls) {
    walls.push_back({{"origin", vec(w.origin)},
                     {"u", vec(w.u)},
                     {"v", vec(w.v)},
                     {"width", w.width},
                     {"height", w.height}});
  }
  Json placements = Json::array();
  for (const auto& p : world.placements) {
    placements.push_back({{"text", p.content},
                          {"category", p.category == TextCategory::ID ? "id" : "generic"},
                          {"wall", p.wall},
                          {"a", p.a},
                          {"b", p.b},
                          {"width", p.width},
                          {"height", p.height},
                          {"floor", p.floor}});
  }
  Json route = Json::array();
  for (const auto& w : world.route) route.push_back({{"position", vec(w.position)}, {"leg", w.leg}});
  return Json{{"scenario", scenario_name(world.scenario)},
              {"floors", world.floors},
              {"floor_spacing", world.floor_spacing},
              {"walls", walls},
              {"placements", placements},
              {"route", route}};
}

NoiseModel NoiseModel::noiseless() {
  NoiseModel n;
  n.odom_sigma = Vec6::Zero();
  n.detect_prob = 1.0;
  n.misread_prob = 0.0;
  n.bbox_jitter = 0.0;
  n.cloud_sigma = 0.0;
  return n;
}

CalibratedRig default_rig() {
  CalibratedRig rig;
  rig.intrinsics = {320.0, 320.0, 320.0, 240.0};
  Mat3 r;
  r.col(0) = -Vec3::UnitY();
  r.col(1) = -Vec3::UnitZ();
  r.col(2) = Vec3::UnitX();
  rig.extrinsic_cam_in_lidar = Pose(r, Vec3(0.1, 0.0, 0.05));
  return rig;
}

std::string misread(const std::string& content, std::uint64_t pick) {
  static const std::map<char, char> kConfusable = {
      {'0', 'O'}, {'O', '0'}, {'1', 'I'}, {'I', '1'}, {'5', 'S'}, {'S', '5'}, {'8', 'B'},
      {'B', '8'}, {'2', 'Z'}, {'Z', '2'}, {'6', 'G'}, {'G', '6'}, {'E', 'F'}, {'F', 'E'},
      {'C', 'G'}};
  std::vector<std::size_t> positions;
  for (std::size_t k = 0; k < content.size(); ++k) {
    if (kConfusable.count(content[k])) positions.push_back(k);
  }
  if (positions.empty()) return content;
  std::string out = content;
  const std::size_t k = positions[pick % positions.size()];
  out[k] = kConfusable.at(content[k]);
  return out;
}

SimulationResult simulate(const World& world, const std::vector<Waypoint>& route,
                          const CalibratedRig& rig, const NoiseModel& noise,
                          const SimulationParams& params, std::uint64_t seed) {
  if (route.size() < 2) throw Error(ErrorCode::WaypointOutsideWorld, "route needs two waypoints");
  for (std::size_t k = 0; k < route.size(); ++k) {
    if (!world.contains(route[k].position)) {
      throw Error(ErrorCode::WaypointOutsideWorld,
                  "waypoint " + std::to_string(k) + " lies outside the world");
    }
  }
  if (!(params.rate > 0.0) || !(params.speed > 0.0)) {
    throw Error(ErrorCode::ConfigError, "rate and speed must be positive");
  }

  SimulationResult out;
  const Trajectory traj = sample_route(route, params.speed / params.rate);
  out.ground_truth = traj.poses;
  const std::size_t n = traj.poses.size();

  for (std::size_t k = 0; k < n; ++k) {
    const std::string& label = route[traj.segment[k] + 1].leg;
    if (out.legs.empty() || out.legs.back().label != label) out.legs.push_back({label, k, k});
    out.legs.back().last_frame = k;
  }

  out.odometry.resize(n);
  out.odometry[0] = out.ground_truth[0];
  const bool exact = noise.odom_sigma.isZero(0.0);
  for (std::size_t k = 1; k < n; ++k) {
    if (exact) {
      out.odometry[k] = out.ground_truth[k];
      continue;
    }
    auto rng = make_rng(seed, k, 0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vec6 xi;
    for (int c = 0; c < 6; ++c) xi(c) = noise.odom_sigma(c) * gauss(rng);
    const Pose step = out.ground_truth[k - 1].inverse() * out.ground_truth[k];
    out.odometry[k] = out.odometry[k - 1] * step * exp_map(xi);
  }

  out.records.push_back(CalibRecord{rig});
  const auto& k_cam = rig.intrinsics;
  const double cos_max_incidence = std::cos(noise.max_incidence);

  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / params.rate;
    out.records.push_back(OdomRecord{t, k, out.odometry[k]});

    const Pose& lidar = out.ground_truth[k];
    std::vector<std::size_t> near;
    for (std::size_t w = 0; w < world.walls.size(); ++w) {
      if (distance_to_wall(world.walls[w], lidar.translation()) <= params.lidar_range) {
        near.push_back(w);
      }
    }

    CloudRecord cloud;
    cloud.frame = k;
    {
      auto rng = make_rng(seed, k, 1);
      std::uniform_real_distribution<double> az(-params.lidar_h_fov, params.lidar_h_fov);
      std::uniform_real_distribution<double> el(-params.lidar_v_fov, params.lidar_v_fov);
      std::normal_distribution<double> gauss(0.0, 1.0);
      cloud.points.reserve(params.lidar_rays);
      for (std::size_t r = 0; r < params.lidar_rays; ++r) {
        const double a = az(rng);
        const double e = el(rng);
        const Vec3 dir_l(std::cos(e) * std::cos(a), std::cos(e) * std::sin(a), std::sin(e));
        const Vec3 dir_w = lidar.rotation() * dir_l;
        double best = params.lidar_range;
        bool hit = false;
        for (auto w : near) {
          double s = 0.0;
          if (intersect(world.walls[w], lidar.translation(), dir_w, s) && s < best) {
            best = s;
            hit = true;
          }
        }
        Vec3 jitter = Vec3::Zero();
        if (noise.cloud_sigma > 0.0) {
          jitter = noise.cloud_sigma * Vec3(gauss(rng), gauss(rng), gauss(rng));
        }
        if (hit) cloud.points.push_back(best * dir_l + jitter);
      }
    }
    out.records.push_back(std::move(cloud));

    if (k + 1 >= n) continue;
    const double s = params.camera_offset * params.rate;
    const Pose lidar_at_image =
        lidar * interpolate(lidar.inverse() * out.ground_truth[k + 1], s);
    const Pose cam = lidar_at_image * rig.extrinsic_cam_in_lidar;
    const Pose world_to_cam = cam.inverse();
    const Vec3 c = cam.translation();

    auto rng = make_rng(seed, k, 2);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    TextsRecord texts;
    texts.t = t + params.camera_offset;
    for (const auto& p : world.placements) {
      const Wall& w = world.walls[p.wall];
      const Vec3 center = w.point(p.a + 0.5 * p.width, p.b);
      const Vec3 to_cam = c - center;
      const double range = to_cam.norm();
      if (range >= noise.max_range || range < 1e-6) continue;
      const double cos_inc = w.normal().dot(to_cam) / range;
      if (cos_inc <= cos_max_incidence) continue;
      const auto corners = world.placement_corners(p);
      std::array<PixelPoint, 4> quad{};
      bool in_view = true;
      for (std::size_t q = 0; q < 4 && in_view; ++q) {
        const Vec3 pc = world_to_cam * corners[q];
        if (pc.z() < 0.05) {
          in_view = false;
          break;
        }
        quad[q] = project(k_cam, pc);
        in_view = quad[q].u >= 0.0 && quad[q].u <= params.image_width && quad[q].v >= 0.0 &&
                  quad[q].v <= params.image_height;
      }
      if (!in_view) continue;
      if (segment_blocked(world, near, p.wall, c, center)) continue;
      bool corner_blocked = false;
      for (const auto& corner : corners) {
        if (segment_blocked(world, near, p.wall, c, corner)) {
          corner_blocked = true;
          break;
        }
      }
      if (corner_blocked) continue;

      const double prob =
          noise.detect_prob * std::clamp(1.0 - range / noise.max_range, 0.0, 1.0) * cos_inc;
      const double draw = unit(rng);
      const double misread_draw = unit(rng);
      const std::uint64_t pick = rng();
      const double conf_noise = gauss(rng);
      if (draw >= prob) continue;

      TextDetection det;
      det.content = p.content;
      if (misread_draw < noise.misread_prob) {
        det.content = misread(p.content, pick);
        if (det.content != p.content) ++out.misreads;
      }
      det.confidence = std::clamp(0.95 - 0.04 * range + 0.02 * conf_noise, 0.05, 1.0);
      det.timestamp = texts.t;
      for (auto& px : quad) {
        if (noise.bbox_jitter > 0.0) {
          px.u += noise.bbox_jitter * gauss(rng);
          px.v += noise.bbox_jitter * gauss(rng);
        }
      }
      det.quad = quad;
      texts.detections.push_back(std::move(det));
    }
    if (!texts.detections.empty()) {
      out.detections += texts.detections.size();
      out.records.push_back(std::move(texts));
    }
  }
  return out;
}

}  // namespace textlcd
