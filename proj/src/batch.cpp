#include "gapflight/batch.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace gapflight {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

void BatchSpec::validate() const {
  if (orientations_deg.empty()) {
    throw ConfigError("batch needs at least one gap orientation");
  }
  if (trials_per_orientation < 1) {
    throw ConfigError("batch needs at least one trial per orientation");
  }
  for (const auto& [roll, pitch] : orientations_deg) {
    if (std::abs(roll) > max_roll_deg || std::abs(pitch) > max_pitch_deg) {
      throw ConfigError("gap orientation outside the configured envelope");
    }
  }
}

TrialRecord to_record(const TrialReport& r) {
  TrialRecord rec;
  rec.roll_deg = r.gap_roll * 180.0 / M_PI;
  rec.pitch_deg = r.gap_pitch * 180.0 / M_PI;
  rec.seed = r.seed;
  rec.success = r.success;
  rec.planning_failed = r.planning_failed;
  rec.pos_error = r.pos_error_tc;
  rec.vel_error = r.vel_error_tc;
  rec.roll_error = r.roll_error_tc;
  rec.pitch_error = r.pitch_error_tc;
  rec.entry_pos_error = r.entry_pos_error;
  rec.min_clearance = r.min_clearance;
  return rec;
}

namespace {

AxisStats stats_of(const std::vector<double>& xs) {
  AxisStats s;
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(var / static_cast<double>(xs.size()));
  return s;
}

ordered_json to_json(const AxisStats& s) {
  return ordered_json{{"mean", s.mean}, {"std", s.stddev}};
}

ordered_json record_to_json(const TrialRecord& r) {
  return ordered_json{
      {"roll_deg", r.roll_deg},
      {"pitch_deg", r.pitch_deg},
      {"seed", r.seed},
      {"success", r.success},
      {"planning_failed", r.planning_failed},
      {"pos_error", {r.pos_error.x(), r.pos_error.y(), r.pos_error.z()}},
      {"vel_error", {r.vel_error.x(), r.vel_error.y(), r.vel_error.z()}},
      {"roll_error", r.roll_error},
      {"pitch_error", r.pitch_error},
      {"entry_pos_error", r.entry_pos_error},
      {"min_clearance", r.min_clearance},
  };
}

TrialRecord record_from_json(const ordered_json& j) {
  TrialRecord r;
  r.roll_deg = j.at("roll_deg").get<double>();
  r.pitch_deg = j.at("pitch_deg").get<double>();
  r.seed = j.at("seed").get<uint64_t>();
  r.success = j.at("success").get<bool>();
  r.planning_failed = j.at("planning_failed").get<bool>();
  for (int i = 0; i < 3; ++i) {
    r.pos_error[i] = j.at("pos_error").at(i).get<double>();
    r.vel_error[i] = j.at("vel_error").at(i).get<double>();
  }
  r.roll_error = j.at("roll_error").get<double>();
  r.pitch_error = j.at("pitch_error").get<double>();
  r.entry_pos_error = j.at("entry_pos_error").get<double>();
  r.min_clearance = j.at("min_clearance").get<double>();
  return r;
}

}  // namespace

BatchStats compute_stats(const std::vector<TrialRecord>& records) {
  BatchStats out;
  out.n_trials = static_cast<int>(records.size());

  std::vector<double> pos[3], vel[3], roll, pitch, pos_norm, vel_norm, entry;
  int successes = 0;

  struct Key {
    double roll, pitch;
  };
  std::vector<std::pair<Key, std::vector<const TrialRecord*>>> groups;

  for (const TrialRecord& r : records) {
    if (r.success) ++successes;
    if (r.planning_failed) {
      ++out.n_planning_failed;
    } else {
      for (int i = 0; i < 3; ++i) {
        pos[i].push_back(std::abs(r.pos_error[i]));
        vel[i].push_back(std::abs(r.vel_error[i]));
      }
      roll.push_back(std::abs(r.roll_error));
      pitch.push_back(std::abs(r.pitch_error));
      pos_norm.push_back(r.pos_error.norm());
      vel_norm.push_back(r.vel_error.norm());
      entry.push_back(r.entry_pos_error);
    }
    bool grouped = false;
    for (auto& [key, members] : groups) {
      if (std::abs(key.roll - r.roll_deg) < 1e-9 &&
          std::abs(key.pitch - r.pitch_deg) < 1e-9) {
        members.push_back(&r);
        grouped = true;
        break;
      }
    }
    if (!grouped) groups.push_back({{r.roll_deg, r.pitch_deg}, {&r}});
  }

  out.n_with_errors = static_cast<int>(pos_norm.size());
  out.success_rate =
      records.empty() ? 0.0
                      : static_cast<double>(successes) /
                            static_cast<double>(records.size());
  for (int i = 0; i < 3; ++i) {
    out.pos[i] = stats_of(pos[i]);
    out.vel[i] = stats_of(vel[i]);
  }
  out.roll = stats_of(roll);
  out.pitch = stats_of(pitch);
  out.pos_norm = stats_of(pos_norm);
  out.vel_norm = stats_of(vel_norm);
  out.entry_pos_error = stats_of(entry);

  for (const auto& [key, members] : groups) {
    BatchStats::PerOrientation po;
    po.roll_deg = key.roll;
    po.pitch_deg = key.pitch;
    po.n = static_cast<int>(members.size());
    int ok = 0;
    std::vector<double> norms;
    for (const TrialRecord* r : members) {
      if (r->success) ++ok;
      if (!r->planning_failed) norms.push_back(r->pos_error.norm());
    }
    po.success_rate = static_cast<double>(ok) / static_cast<double>(po.n);
    po.mean_pos_norm = stats_of(norms).mean;
    out.per_orientation.push_back(po);
  }
  return out;
}

std::string summary_to_json(const BatchStats& s) {
  ordered_json j;
  j["n_trials"] = s.n_trials;
  j["n_with_errors"] = s.n_with_errors;
  j["n_planning_failed"] = s.n_planning_failed;
  j["success_rate"] = s.success_rate;
  j["position_error"] = {{"x", to_json(s.pos[0])},
                         {"y", to_json(s.pos[1])},
                         {"z", to_json(s.pos[2])},
                         {"norm", to_json(s.pos_norm)}};
  j["velocity_error"] = {{"x", to_json(s.vel[0])},
                         {"y", to_json(s.vel[1])},
                         {"z", to_json(s.vel[2])},
                         {"norm", to_json(s.vel_norm)}};
  j["orientation_error"] = {{"roll", to_json(s.roll)},
                            {"pitch", to_json(s.pitch)}};
  j["entry_pos_error"] = to_json(s.entry_pos_error);
  ordered_json arr = ordered_json::array();
  for (const auto& po : s.per_orientation) {
    arr.push_back(ordered_json{{"roll_deg", po.roll_deg},
                               {"pitch_deg", po.pitch_deg},
                               {"n", po.n},
                               {"success_rate", po.success_rate},
                               {"mean_pos_norm", po.mean_pos_norm}});
  }
  j["per_orientation"] = arr;
  return j.dump(2) + "\n";
}

void write_summary_json(const BatchStats& stats, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path);
  out << summary_to_json(stats);
  if (!out) throw IoError("failed writing " + path);
}

void emit_trajectory_csv(const TrialReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path);

  out << "t,px_true,py_true,pz_true,vx_true,vy_true,vz_true,"
         "roll_true,pitch_true,yaw_true,"
         "px_est,py_est,pz_est,vx_est,vy_est,vz_est,"
         "roll_est,pitch_est,yaw_est,"
         "px_ref,py_ref,pz_ref,vx_ref,vy_ref,vz_ref,phase,detected\n";

  char buf[32];
  const auto put = [&](double v, char sep) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf << sep;
  };
  for (const TrialSeriesRow& row : report.series) {
    put(row.t, ',');
    for (int i = 0; i < 3; ++i) put(row.p_true[i], ',');
    for (int i = 0; i < 3; ++i) put(row.v_true[i], ',');
    for (int i = 0; i < 3; ++i) put(row.rpy_true[i], ',');
    for (int i = 0; i < 3; ++i) put(row.p_est[i], ',');
    for (int i = 0; i < 3; ++i) put(row.v_est[i], ',');
    for (int i = 0; i < 3; ++i) put(row.rpy_est[i], ',');
    for (int i = 0; i < 3; ++i) put(row.p_ref[i], ',');
    for (int i = 0; i < 3; ++i) put(row.v_ref[i], ',');
    out << (row.phase == TrialPhase::kApproach ? "approach" : "traverse");
    out << ',' << (row.detected ? 1 : 0) << '\n';
  }
  if (!out) throw IoError("failed writing " + path);
}

BatchStats run_batch(const BatchSpec& spec) {
  spec.validate();
  const fs::path dir(spec.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + spec.output_dir);

  std::vector<TrialRecord> records;
  ordered_json manifest;
  manifest["base_seed"] = spec.base_seed;
  manifest["trials_per_orientation"] = spec.trials_per_orientation;
  ordered_json trials = ordered_json::array();

  int index = 0;
  for (const auto& [roll_deg, pitch_deg] : spec.orientations_deg) {
    for (int k = 0; k < spec.trials_per_orientation; ++k, ++index) {
      TrialConfig cfg = spec.base;
      cfg.gap.orientation =
          gap_orientation(roll_deg * M_PI / 180.0, pitch_deg * M_PI / 180.0);
      cfg.seed = spec.base_seed + static_cast<uint64_t>(index);

      TrialReport report = run_trial(cfg);
      const TrialRecord rec = to_record(report);
      records.push_back(rec);

      char name[64];
      std::snprintf(name, sizeof(name), "trial_%04d", index);
      const std::string csv_name = std::string(name) + ".csv";
      const std::string json_name = std::string(name) + ".json";
      if (!report.series.empty()) {
        emit_trajectory_csv(report, (dir / csv_name).string());
      }
      {
        ordered_json tj = record_to_json(rec);
        tj["failure_reason"] = report.failure_reason;
        tj["replan_count"] = report.replan_count;
        tj["detection_count"] = report.detection_count;
        tj["series_csv"] = report.series.empty() ? "" : csv_name;
        std::ofstream out(dir / json_name, std::ios::binary);
        if (!out) throw IoError("cannot write trial report");
        out << tj.dump(2) << "\n";
      }
      trials.push_back(ordered_json{{"index", index},
                                    {"roll_deg", roll_deg},
                                    {"pitch_deg", pitch_deg},
                                    {"seed", cfg.seed},
                                    {"report", json_name}});
    }
  }
  manifest["trials"] = trials;
  {
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    if (!out) throw IoError("cannot write manifest");
    out << manifest.dump(2) << "\n";
  }

  const BatchStats stats = compute_stats(records);
  write_summary_json(stats, (dir / "summary.json").string());
  return stats;
}

BatchStats recompute_stats(const std::string& manifest_path) {
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw IoError("cannot open " + manifest_path);
  ordered_json manifest;
  in >> manifest;

  const fs::path dir = fs::path(manifest_path).parent_path();
  std::vector<TrialRecord> records;
  for (const auto& trial : manifest.at("trials")) {
    const std::string report_name = trial.at("report").get<std::string>();
    std::ifstream rin(dir / report_name, std::ios::binary);
    if (!rin) throw IoError("cannot open trial report " + report_name);
    ordered_json rj;
    rin >> rj;
    records.push_back(record_from_json(rj));
  }
  return compute_stats(records);
}

std::string format_stats(const BatchStats& s) {
  std::ostringstream os;
  const auto line = [&](const char* label, const AxisStats& a,
                        double scale = 1.0) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "  %-18s mean %8.4f   std %8.4f\n", label,
                  a.mean * scale, a.stddev * scale);
    os << buf;
  };
  os << "trials: " << s.n_trials << "  (planning failures: "
     << s.n_planning_failed << ")\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "success rate: %.3f\n", s.success_rate);
  os << buf;
  os << "position error at gap center [m]\n";
  line("x", s.pos[0]);
  line("y", s.pos[1]);
  line("z", s.pos[2]);
  line("norm", s.pos_norm);
  os << "velocity error at gap center [m/s]\n";
  line("x", s.vel[0]);
  line("y", s.vel[1]);
  line("z", s.vel[2]);
  line("norm", s.vel_norm);
  os << "orientation error at gap center [deg]\n";
  line("roll", s.roll, 180.0 / M_PI);
  line("pitch", s.pitch, 180.0 / M_PI);
  return os.str();
}

}  // namespace gapflight
