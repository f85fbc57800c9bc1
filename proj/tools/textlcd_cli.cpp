#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "textlcd/pipeline.hpp"

namespace fs = std::filesystem;
using namespace textlcd;

namespace {

constexpr const char* kVersion = "textlcd 0.1.0";

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingInput, "cannot open " + path);
  return in;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::MissingInput, "cannot write " + path.string());
  return out;
}

PipelineConfig make_config(const std::string& path) {
  PipelineConfig config = path.empty() ? PipelineConfig{} : load_config(path);
  apply_env_overrides(config);
  return config;
}

std::vector<LoopConstraint> read_loops(const std::string& path) {
  auto in = open_input(path);
  std::vector<LoopConstraint> loops;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    const Json j = parse_line(text, line);
    try {
      loops.push_back(constraint_from_json(j));
    } catch (const std::exception& e) {
      throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(line) + ": " + e.what());
    }
  }
  return loops;
}

std::vector<Pose> odometry_from_log(const std::vector<LogRecord>& records) {
  std::vector<Pose> poses;
  for (const auto& r : records) {
    if (const auto* o = std::get_if<OdomRecord>(&r)) {
      if (o->frame != poses.size()) {
        throw Error(ErrorCode::MalformedRecord, "odometry frames must be consecutive from 0");
      }
      poses.push_back(o->pose);
    }
  }
  return poses;
}

int cmd_simulate(const std::string& scenario, std::uint64_t seed, const std::string& out_dir,
                 const std::string& config_path, bool seed_given) {
  PipelineConfig config = make_config(config_path);
  if (!scenario.empty()) config.simulation.scenario = scenario;
  if (seed_given) config.simulation.seed = seed;
  const World world = build_world(parse_scenario(config.simulation.scenario), config.simulation.seed);
  const auto sim = simulate(world, world.route, default_rig(), config.simulation.noise,
                            config.simulation.params, config.simulation.seed);
  auto log = open_output(fs::path(out_dir) / "log.jsonl");
  write_log(log, sim.records);
  auto gt = open_output(fs::path(out_dir) / "gt.jsonl");
  write_ground_truth(gt, sim.ground_truth);

  std::size_t ids = 0;
  for (const auto& p : world.placements) ids += p.category == TextCategory::ID;
  std::cout << "scenario " << scenario_name(world.scenario) << " seed " << config.simulation.seed
            << ": " << world.floors << " floor(s), " << world.walls.size() << " walls, "
            << world.placements.size() << " texts (" << ids << " ID), "
            << sim.ground_truth.size() << " frames, " << sim.detections << " detections\n";
  return 0;
}

int cmd_detect(const std::string& log_path, const std::string& out_dir,
               const std::string& config_path, const std::string& db_dump) {
  const PipelineConfig config = make_config(config_path);
  auto in = open_input(log_path);
  const auto records = read_log(in);
  DetectPipeline pipeline(config);
  for (const auto& r : records) pipeline.push(r);
  pipeline.finish();

  auto loops = open_output(fs::path(out_dir) / "loops.jsonl");
  for (const auto& c : pipeline.constraints()) loops << constraint_to_json(c).dump() << '\n';
  auto timing = open_output(fs::path(out_dir) / "timing.json");
  Json t = pipeline.timing().to_json();
  const auto& s = pipeline.extraction_stats();
  t["detections"] = s.detections;
  t["entities"] = s.entities;
  timing << t.dump(2) << '\n';
  if (!db_dump.empty()) {
    auto db = open_output(db_dump);
    pipeline.detector().database().dump_jsonl(db);
  }
  std::cout << pipeline.constraints().size() << " loop constraint(s) from "
            << pipeline.odometry().size() << " frames\n";
  return 0;
}

int cmd_optimize(const std::string& log_path, const std::string& loops_path,
                 const std::string& out_path, const std::string& config_path) {
  const PipelineConfig config = make_config(config_path);
  auto in = open_input(log_path);
  const auto odometry = odometry_from_log(read_log(in));
  if (odometry.empty()) throw Error(ErrorCode::MissingInput, "log has no odometry");
  const auto loops = read_loops(loops_path);
  for (const auto& c : loops) {
    if (c.frame_i >= odometry.size() || c.frame_j >= odometry.size()) {
      throw Error(ErrorCode::LengthMismatch, "loop references frame beyond the odometry");
    }
  }
  const auto result = run_optimize(odometry, loops, config);
  auto out = open_output(out_path);
  write_trajectory(out, result.nodes);
  std::cout << "cost " << result.initial_cost << " -> " << result.final_cost << " in "
            << result.iterations << " iteration(s)\n";
  return 0;
}

int cmd_evaluate(const std::string& traj_path, const std::string& gt_path,
                 const std::string& loops_path, const std::string& out_path,
                 const std::string& config_path) {
  const PipelineConfig config = make_config(config_path);
  auto traj_in = open_input(traj_path);
  const auto est = read_trajectory(traj_in);
  auto gt_in = open_input(gt_path);
  const auto gt = read_ground_truth(gt_in);
  std::vector<LoopConstraint> loops;
  if (!loops_path.empty()) loops = read_loops(loops_path);
  for (const auto& c : loops) {
    if (c.frame_i >= gt.size()) throw Error(ErrorCode::LengthMismatch, "loop beyond ground truth");
  }
  const Json report = evaluate_run(est, gt, loops, config);
  auto out = open_output(out_path);
  out << report.dump(2) << '\n';
  std::cout << "ate_mean " << report["ate_mean"].get<double>() << " tp " << report["tp"]
            << " fp " << report["fp"] << " fn " << report["fn"] << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Text-entity loop closure detection toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "configuration file")->check(CLI::ExistingFile);

  std::string scenario;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  auto* sim = app.add_subcommand("simulate", "generate a synthetic log and ground truth");
  sim->add_option("--scenario", scenario, "corridor | semi_outdoor | multifloor");
  auto* seed_opt = sim->add_option("--seed", seed, "random seed");
  sim->add_option("--out", out_dir, "output directory");

  std::string log_path;
  std::string db_dump;
  auto* det = app.add_subcommand("detect", "run loop closure detection over a log");
  det->add_option("--log", log_path, "input log.jsonl")->required();
  det->add_option("--out", out_dir, "output directory");
  det->add_option("--db-dump", db_dump, "write the observation database as JSONL");

  std::string loops_path;
  std::string out_path = "traj.jsonl";
  auto* opt = app.add_subcommand("optimize", "pose graph optimization of odometry and loops");
  opt->add_option("--log", log_path, "input log.jsonl")->required();
  opt->add_option("--loops", loops_path, "loops.jsonl")->required();
  opt->add_option("--out", out_path, "output trajectory");

  std::string traj_path;
  std::string gt_path;
  std::string report_path = "report.json";
  auto* eva = app.add_subcommand("evaluate", "score loops and trajectory against ground truth");
  eva->add_option("--traj", traj_path, "estimated trajectory")->required();
  eva->add_option("--gt", gt_path, "ground truth")->required();
  eva->add_option("--loops", loops_path, "loops.jsonl");
  eva->add_option("--out", report_path, "output report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: UsageError: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*sim) return cmd_simulate(scenario, seed, out_dir, config_path, seed_opt->count() > 0);
    if (*det) return cmd_detect(log_path, out_dir, config_path, db_dump);
    if (*opt) return cmd_optimize(log_path, loops_path, out_path, config_path);
    if (*eva) return cmd_evaluate(traj_path, gt_path, loops_path, report_path, config_path);
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
