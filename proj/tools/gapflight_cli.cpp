#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gapflight/batch.hpp"
#include "gapflight/config.hpp"

namespace fs = std::filesystem;
using namespace gapflight;

namespace {

TrialConfig config_from(const std::string& path) {
  return path.empty() ? parse_trial_config(default_config_json())
                      : load_trial_config(path);
}

int cmd_plan(const std::string& config_path, const std::string& out_path) {
  const TrialConfig cfg = config_from(config_path);
  const Vec3 g = cfg.world.gravity;
  const PlaneBasis basis = plane_basis(cfg.gap, g, cfg.approach_side);
  const auto [params, traverse] =
      optimize_traverse(cfg.gap, basis, cfg.v0_max, cfg.d_min, g,
                        cfg.search_box, cfg.v_nominal);
  const SamplingConfig samp = resolve_sampling(cfg.sampling, cfg.gap, basis);
  const CandidateTrajectory cand =
      plan_approach(samp, traverse, cfg.gap, cfg.mount, cfg.vehicle.limits, g,
                    cfg.sampling.cost_samples);

  nlohmann::ordered_json j;
  j["traverse"] = {
      {"gamma", params.gamma},
      {"d", params.d},
      {"t_center", traverse.t_center},
      {"t_end", traverse.t_end},
      {"start_position", {traverse.start_position.x(),
                          traverse.start_position.y(),
                          traverse.start_position.z()}},
      {"start_velocity", {traverse.start_velocity.x(),
                          traverse.start_velocity.y(),
                          traverse.start_velocity.z()}},
      {"start_speed", traverse.start_velocity.norm()},
      {"thrust", traverse.thrust_mag},
  };
  j["approach"] = {
      {"start", {cand.primitive.start.p.x(), cand.primitive.start.p.y(),
                 cand.primitive.start.p.z()}},
      {"duration", cand.primitive.duration},
      {"theta_rms_deg", cand.theta_rms * 180.0 / M_PI},
      {"start_distance", cand.start_distance},
      {"cost", cand.cost},
  };
  const std::string text = j.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw IoError("cannot write " + out_path);
    out << text;
  }
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            int64_t seed_override) {
  TrialConfig cfg = config_from(config_path);
  if (seed_override >= 0) cfg.seed = static_cast<uint64_t>(seed_override);

  const TrialReport report = run_trial(cfg);
  std::printf("trial seed=%llu  %s\n",
              static_cast<unsigned long long>(report.seed),
              report.success ? "SUCCESS" : "FAILURE");
  if (!report.success) {
    std::printf("  reason: %s\n", report.failure_reason.c_str());
  }
  if (!report.planning_failed) {
    std::printf("  pos error at t_c: %.4f m   entry error: %.4f m   "
                "clearance: %.4f m\n",
                report.pos_error_tc.norm(), report.entry_pos_error,
                report.min_clearance);
    std::printf("  replans: %d   detections: %d\n", report.replan_count,
                report.detection_count);
  }
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    emit_trajectory_csv(report, (fs::path(out_dir) / "trial.csv").string());
    std::printf("  wrote %s\n",
                (fs::path(out_dir) / "trial.csv").string().c_str());
  }
  return 0;
}

int cmd_batch(const std::string& config_path, const std::string& out_dir,
              int64_t seed_override, int trials_override) {
  BatchSpec spec =
      config_path.empty()
          ? parse_batch_spec(default_config_json(), out_dir)
          : load_batch_spec(config_path, out_dir);
  if (seed_override >= 0) spec.base_seed = static_cast<uint64_t>(seed_override);
  if (trials_override > 0) spec.trials_per_orientation = trials_override;

  const BatchStats stats = run_batch(spec);
  std::cout << format_stats(stats);
  std::printf("artifacts in %s\n", out_dir.c_str());
  return 0;
}

int cmd_stats(const std::string& manifest_path, const std::string& out_path,
              bool check) {
  const BatchStats stats = recompute_stats(manifest_path);
  std::cout << format_stats(stats);
  if (!out_path.empty()) {
    write_summary_json(stats, out_path);
  }
  if (check) {
    const fs::path summary =
        fs::path(manifest_path).parent_path() / "summary.json";
    std::ifstream in(summary, std::ios::binary);
    if (!in) throw IoError("no summary.json next to the manifest");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (ss.str() != summary_to_json(stats)) {
      std::fprintf(stderr, "recomputed statistics differ from summary.json\n");
      return 3;
    }
    std::printf("summary.json matches the recomputed statistics\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"perception-aware gap-traverse planner and simulator"};
  app.require_subcommand(1);

  std::string config_path, out_path, out_dir, manifest_path;
  int64_t seed = -1;
  int trials = 0;
  bool check = false, dump_config = false;

  auto* plan = app.add_subcommand("plan", "plan one traverse + approach");
  plan->add_option("-c,--config", config_path, "config JSON path");
  plan->add_option("-o,--output", out_path, "write plan JSON here");

  auto* run = app.add_subcommand("run", "run a single closed-loop trial");
  run->add_option("-c,--config", config_path, "config JSON path");
  run->add_option("-o,--output", out_dir, "directory for the trial CSV");
  run->add_option("-s,--seed", seed, "override the trial seed");

  auto* batch = app.add_subcommand("batch", "run a Monte-Carlo batch");
  batch->add_option("-c,--config", config_path, "config JSON path");
  batch->add_option("-o,--output", out_dir, "output directory")->required();
  batch->add_option("-s,--seed", seed, "override the base seed");
  batch->add_option("-n,--trials", trials, "trials per orientation");

  auto* stats = app.add_subcommand("stats", "recompute batch statistics");
  stats->add_option("-m,--manifest", manifest_path, "manifest.json path")
      ->required();
  stats->add_option("-o,--output", out_path, "write summary JSON here");
  stats->add_flag("--check", check, "compare against the stored summary");

  app.add_flag("--dump-config", dump_config, "print the default config");

  CLI11_PARSE(app, argc, argv);

  try {
    if (dump_config) {
      std::cout << default_config_json() << "\n";
      return 0;
    }
    if (plan->parsed()) return cmd_plan(config_path, out_path);
    if (run->parsed()) return cmd_run(config_path, out_dir, seed);
    if (batch->parsed()) return cmd_batch(config_path, out_dir, seed, trials);
    if (stats->parsed()) return cmd_stats(manifest_path, out_path, check);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
