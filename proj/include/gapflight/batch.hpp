#pragma once

#include <string>
#include <vector>

#include "gapflight/simulator.hpp"

namespace gapflight {

/// Batch of seeded trials over a set of gap orientations.
struct BatchSpec {
  std::vector<std::pair<double, double>> orientations_deg;  // (roll, pitch)
  int trials_per_orientation = 5;
  uint64_t base_seed = 1;
  std::string output_dir;
  TrialConfig base;
  double max_roll_deg = 90.0;   // configured envelope
  double max_pitch_deg = 90.0;

  void validate() const;
};

struct AxisStats {
  double mean = 0.0;
  double stddev = 0.0;
};

/// Error statistics at the gap-center time, absolute per axis, over all
/// trials that produced a trajectory (failed trials included, planning
/// failures excluded from the error averages).
struct BatchStats {
  std::array<AxisStats, 3> pos;   // |e_x|, |e_y|, |e_z| in m
  std::array<AxisStats, 3> vel;   // m/s
  AxisStats roll;                 // rad
  AxisStats pitch;                // rad
  AxisStats pos_norm;             // m
  AxisStats vel_norm;             // m/s
  AxisStats entry_pos_error;      // m
  double success_rate = 0.0;
  int n_trials = 0;
  int n_with_errors = 0;
  int n_planning_failed = 0;

  struct PerOrientation {
    double roll_deg = 0.0, pitch_deg = 0.0;
    int n = 0;
    double success_rate = 0.0;
    double mean_pos_norm = 0.0;
  };
  std::vector<PerOrientation> per_orientation;
};

/// Compact per-trial record, the unit the statistics are computed from.
struct TrialRecord {
  double roll_deg = 0.0, pitch_deg = 0.0;
  uint64_t seed = 0;
  bool success = false;
  bool planning_failed = false;
  Vec3 pos_error = Vec3::Zero();
  Vec3 vel_error = Vec3::Zero();
  double roll_error = 0.0, pitch_error = 0.0;
  double entry_pos_error = 0.0;
  double min_clearance = 0.0;
};

TrialRecord to_record(const TrialReport& report);

/// Aggregates records into Table-style statistics (population std).
BatchStats compute_stats(const std::vector<TrialRecord>& records);

/// Runs every trial (seed = base + index), writes per-trial CSV + JSON
/// report files, a manifest, and a summary; returns the statistics.
/// Per-trial planning failures are recorded, never fatal.
BatchStats run_batch(const BatchSpec& spec);

/// Writes the time series: one header row, then one row per recorded
/// sample with 17-significant-digit floats.
void emit_trajectory_csv(const TrialReport& report, const std::string& path);

/// Re-reads the per-trial reports named by a manifest and recomputes the
/// statistics from scratch.
BatchStats recompute_stats(const std::string& manifest_path);

void write_summary_json(const BatchStats& stats, const std::string& path);
std::string summary_to_json(const BatchStats& stats);

/// Human-readable statistics block (mean / std per axis).
std::string format_stats(const BatchStats& stats);

}  // namespace gapflight
