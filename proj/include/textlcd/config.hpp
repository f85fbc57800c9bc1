#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "textlcd/pose_graph.hpp"
#include "textlcd/simulator.hpp"

namespace textlcd {

struct TextParams {
  double min_confidence = 0.5;
  std::string id_pattern = kDefaultIdPattern;
  double cloud_window = 1.0;  // seconds of LiDAR accumulated per text frame
  std::uint64_t ransac_seed = 0;
};

struct EvaluationParams {
  double tau = 1.7;
  double s_min = 10.0;
};

struct SimulationConfig {
  std::string scenario = "multifloor";
  std::uint64_t seed = 0;
  NoiseModel noise;
  SimulationParams params;
};

struct PipelineConfig {
  TextParams text;
  RansacParams ransac;
  LoopParams loop;
  double odom_sigma_t = 0.005;
  double odom_sigma_r = 1e-4;
  OptimizerParams optimizer;
  EvaluationParams evaluation;
  SimulationConfig simulation;
};

/// Sectioned key = value text ("[section]" headers, '#' comments).
/// Unknown sections or keys raise ConfigError.
PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::string& path);

/// Applies TEXTLCD_<SECTION>_<KEY> variables from the environment.
void apply_env_overrides(PipelineConfig& config);

void set_config_value(PipelineConfig& config, const std::string& section, const std::string& key,
                      const std::string& value);

/// Every "section.key" accepted by the parser.
std::vector<std::string> config_keys();

Json config_to_json(const PipelineConfig& config);

}  // namespace textlcd
