#include "textlcd/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

namespace textlcd {

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& v) {
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) {
    return v.substr(1, v.size() - 2);
  }
  return v;
}

double to_double(const std::string& v, const std::string& name) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  config_error(name + ": expected a number, got '" + v + "'");
}

std::uint64_t to_uint(const std::string& v, const std::string& name) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] != '-') {
      const auto u = std::stoull(v, &used);
      if (used == v.size()) return u;
    }
  } catch (const std::exception&) {
  }
  config_error(name + ": expected a non-negative integer, got '" + v + "'");
}

bool to_bool(const std::string& v, const std::string& name) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  config_error(name + ": expected true or false, got '" + v + "'");
}

struct Entry {
  std::string section;
  std::string key;
  std::function<void(PipelineConfig&, const std::string&, const std::string&)> set;
  std::function<Json(const PipelineConfig&)> get;
};

template <class F>
Entry real(std::string s, std::string k, F ref) {
  return {s, k,
          [ref](PipelineConfig& c, const std::string& v, const std::string& n) {
            ref(c) = to_double(v, n);
          },
          [ref](const PipelineConfig& c) { return Json(ref(const_cast<PipelineConfig&>(c))); }};
}

template <class F>
Entry integer(std::string s, std::string k, F ref) {
  return {s, k,
          [ref](PipelineConfig& c, const std::string& v, const std::string& n) {
            using T = std::remove_reference_t<decltype(ref(c))>;
            ref(c) = static_cast<T>(to_uint(v, n));
          },
          [ref](const PipelineConfig& c) { return Json(ref(const_cast<PipelineConfig&>(c))); }};
}

template <class F>
Entry boolean(std::string s, std::string k, F ref) {
  return {s, k,
          [ref](PipelineConfig& c, const std::string& v, const std::string& n) {
            ref(c) = to_bool(v, n);
          },
          [ref](const PipelineConfig& c) { return Json(ref(const_cast<PipelineConfig&>(c))); }};
}

template <class F>
Entry text(std::string s, std::string k, F ref) {
  return {s, k,
          [ref](PipelineConfig& c, const std::string& v, const std::string&) { ref(c) = v; },
          [ref](const PipelineConfig& c) { return Json(ref(const_cast<PipelineConfig&>(c))); }};
}

#define REF(expr) [](PipelineConfig& c) -> auto& { return expr; }

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = [] {
    std::vector<Entry> e;
    e.push_back(real("text", "min_confidence", REF(c.text.min_confidence)));
    e.push_back(text("text", "id_pattern", REF(c.text.id_pattern)));
    e.push_back(real("text", "cloud_window", REF(c.text.cloud_window)));
    e.push_back(integer("text", "ransac_seed", REF(c.text.ransac_seed)));

    e.push_back(integer("ransac", "iterations", REF(c.ransac.iterations)));
    e.push_back(real("ransac", "inlier_threshold", REF(c.ransac.inlier_threshold)));
    e.push_back(integer("ransac", "min_inliers", REF(c.ransac.min_inliers)));
    e.push_back(real("ransac", "min_inlier_ratio", REF(c.ransac.min_inlier_ratio)));

    e.push_back(real("association", "epsilon", REF(c.loop.association.epsilon)));
    e.push_back(real("association", "d_ltem", REF(c.loop.association.d_ltem)));
    e.push_back(real("association", "r_merge", REF(c.loop.association.r_merge)));
    e.push_back(integer("association", "min_consistent", REF(c.loop.association.min_consistent)));
    e.push_back(boolean("association", "id_conflict_check",
                        REF(c.loop.association.id_conflict_check)));
    e.push_back({"association", "solver",
                 [](PipelineConfig& c, const std::string& v, const std::string& n) {
                   if (v == "exact") c.loop.association.solver = SolverMode::Exact;
                   else if (v == "relaxed") c.loop.association.solver = SolverMode::Relaxed;
                   else if (v == "auto") c.loop.association.solver = SolverMode::Auto;
                   else config_error(n + ": expected exact, relaxed or auto, got '" + v + "'");
                 },
                 [](const PipelineConfig& c) {
                   switch (c.loop.association.solver) {
                     case SolverMode::Exact: return Json("exact");
                     case SolverMode::Relaxed: return Json("relaxed");
                     default: return Json("auto");
                   }
                 }});

    e.push_back(real("loop", "s_min", REF(c.loop.s_min)));
    e.push_back(real("loop", "max_loop_distance", REF(c.loop.max_loop_distance)));
    e.push_back(integer("loop", "cooldown_frames", REF(c.loop.cooldown_frames)));
    e.push_back(real("loop", "drift_base", REF(c.loop.drift_base)));
    e.push_back(real("loop", "drift_rate", REF(c.loop.drift_rate)));
    e.push_back(boolean("loop", "icp_refine", REF(c.loop.icp_refine)));
    e.push_back(boolean("loop", "icp_generic", REF(c.loop.icp_generic)));

    e.push_back(integer("icp", "max_iterations", REF(c.loop.icp.max_iterations)));
    e.push_back(real("icp", "convergence", REF(c.loop.icp.convergence)));
    e.push_back(real("icp", "correspondence_cutoff", REF(c.loop.icp.correspondence_cutoff)));
    e.push_back(real("icp", "min_fitness", REF(c.loop.icp.min_fitness)));
    e.push_back(real("icp", "max_rms", REF(c.loop.icp.max_rms)));
    e.push_back(integer("icp", "min_points", REF(c.loop.icp.min_points)));
    e.push_back(real("icp", "voxel", REF(c.loop.icp.voxel)));

    e.push_back(real("loop_info", "sigma_t", REF(c.loop.sigma_t)));
    e.push_back(real("loop_info", "sigma_r", REF(c.loop.sigma_r)));
    e.push_back(real("odom_info", "sigma_t", REF(c.odom_sigma_t)));
    e.push_back(real("odom_info", "sigma_r", REF(c.odom_sigma_r)));

    e.push_back(integer("optimizer", "max_iterations", REF(c.optimizer.max_iterations)));
    e.push_back(real("optimizer", "relative_cost_tolerance",
                     REF(c.optimizer.relative_cost_tolerance)));
    e.push_back(real("optimizer", "step_tolerance", REF(c.optimizer.step_tolerance)));
    e.push_back(boolean("optimizer", "robust_loops", REF(c.optimizer.robust_loops)));
    e.push_back(real("optimizer", "huber_delta", REF(c.optimizer.huber_delta)));

    e.push_back(real("evaluation", "tau", REF(c.evaluation.tau)));
    e.push_back(real("evaluation", "s_min", REF(c.evaluation.s_min)));

    e.push_back(text("simulation", "scenario", REF(c.simulation.scenario)));
    e.push_back(integer("simulation", "seed", REF(c.simulation.seed)));
    e.push_back({"simulation", "odom_sigma_t",
                 [](PipelineConfig& c, const std::string& v, const std::string& n) {
                   c.simulation.noise.odom_sigma.head<3>().setConstant(to_double(v, n));
                 },
                 [](const PipelineConfig& c) { return Json(c.simulation.noise.odom_sigma(0)); }});
    e.push_back({"simulation", "odom_sigma_r",
                 [](PipelineConfig& c, const std::string& v, const std::string& n) {
                   const double s = to_double(v, n);
                   c.simulation.noise.odom_sigma.tail<3>() << 0.5 * s, 0.5 * s, s;
                 },
                 [](const PipelineConfig& c) { return Json(c.simulation.noise.odom_sigma(5)); }});
    e.push_back(real("simulation", "detect_prob", REF(c.simulation.noise.detect_prob)));
    e.push_back(real("simulation", "max_range", REF(c.simulation.noise.max_range)));
    e.push_back(real("simulation", "max_incidence", REF(c.simulation.noise.max_incidence)));
    e.push_back(real("simulation", "misread_prob", REF(c.simulation.noise.misread_prob)));
    e.push_back(real("simulation", "bbox_jitter", REF(c.simulation.noise.bbox_jitter)));
    e.push_back(real("simulation", "cloud_sigma", REF(c.simulation.noise.cloud_sigma)));
    e.push_back(real("simulation", "rate", REF(c.simulation.params.rate)));
    e.push_back(real("simulation", "speed", REF(c.simulation.params.speed)));
    e.push_back(real("simulation", "camera_offset", REF(c.simulation.params.camera_offset)));
    e.push_back(integer("simulation", "lidar_rays", REF(c.simulation.params.lidar_rays)));
    e.push_back(real("simulation", "lidar_range", REF(c.simulation.params.lidar_range)));
    return e;
  }();
  return entries;
}

#undef REF

void validate(const PipelineConfig& c) {
  const auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) config_error(std::string(name) + " must lie in [0, 1]");
  };
  const auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) config_error(std::string(name) + " must be positive");
  };
  prob(c.text.min_confidence, "text.min_confidence");
  prob(c.ransac.min_inlier_ratio, "ransac.min_inlier_ratio");
  prob(c.simulation.noise.detect_prob, "simulation.detect_prob");
  prob(c.simulation.noise.misread_prob, "simulation.misread_prob");
  prob(c.loop.icp.min_fitness, "icp.min_fitness");
  positive(c.loop.association.epsilon, "association.epsilon");
  positive(c.loop.association.d_ltem, "association.d_ltem");
  positive(c.loop.drift_base, "loop.drift_base");
  if (!(c.loop.drift_rate >= 0.0)) config_error("loop.drift_rate must be >= 0");
  positive(c.loop.sigma_t, "loop_info.sigma_t");
  positive(c.loop.sigma_r, "loop_info.sigma_r");
  positive(c.odom_sigma_t, "odom_info.sigma_t");
  positive(c.odom_sigma_r, "odom_info.sigma_r");
  positive(c.evaluation.tau, "evaluation.tau");
  positive(c.simulation.params.rate, "simulation.rate");
  positive(c.simulation.params.speed, "simulation.speed");
  if (c.ransac.iterations <= 0) config_error("ransac.iterations must be positive");
  if (c.simulation.noise.odom_sigma.minCoeff() < 0.0) config_error("odometry sigmas must be >= 0");
  try {
    IdPattern check(c.text.id_pattern);
  } catch (const Error& e) {
    config_error(e.what());
  }
  parse_scenario(c.simulation.scenario);
}

std::string env_name(const std::string& section, const std::string& key) {
  std::string name = "TEXTLCD_" + section + "_" + key;
  for (auto& ch : name) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return name;
}

}  // namespace

void set_config_value(PipelineConfig& config, const std::string& section, const std::string& key,
                      const std::string& value) {
  bool known_section = false;
  for (const auto& e : registry()) {
    if (e.section != section) continue;
    known_section = true;
    if (e.key == key) {
      e.set(config, value, section + "." + key);
      return;
    }
  }
  if (!known_section) config_error("unknown section [" + section + "]");
  config_error("unknown key '" + key + "' in section [" + section + "]");
}

PipelineConfig parse_config(const std::string& text) {
  PipelineConfig config;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos && line.find_first_of("\"'") > hash) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(number) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') config_error(where + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) config_error(where + "expected key = value");
    if (section.empty()) config_error(where + "key outside of a section");
    try {
      set_config_value(config, section, trim(line.substr(0, eq)),
                       unquote(trim(line.substr(eq + 1))));
    } catch (const Error& e) {
      config_error(where + e.what());
    }
  }
  validate(config);
  return config;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingInput, "cannot open config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void apply_env_overrides(PipelineConfig& config) {
  for (const auto& e : registry()) {
    const char* value = std::getenv(env_name(e.section, e.key).c_str());
    if (value) e.set(config, trim(value), env_name(e.section, e.key));
  }
  validate(config);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& e : registry()) keys.push_back(e.section + "." + e.key);
  return keys;
}

Json config_to_json(const PipelineConfig& config) {
  Json out = Json::object();
  for (const auto& e : registry()) out[e.section][e.key] = e.get(config);
  return out;
}

}  // namespace textlcd
