#include "gapflight/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace gapflight {

namespace {

using nlohmann::json;

// Pulls a key out of an object, tracking which keys were consumed so the
// loader can reject typos.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) {
      throw ConfigError("config section '" + name_ + "' must be an object");
    }
  }

  template <typename T>
  T get(const char* key, T fallback) {
    used_.insert(key);
    if (!j_.contains(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("bad value for '" + name_ + "." + key + "'");
    }
  }

  Vec3 get_vec3(const char* key, const Vec3& fallback) {
    used_.insert(key);
    if (!j_.contains(key)) return fallback;
    const auto& a = j_.at(key);
    if (!a.is_array() || a.size() != 3) {
      throw ConfigError("'" + name_ + "." + key + "' must be a 3-array");
    }
    return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
  }

  bool has(const char* key) {
    used_.insert(key);
    return j_.contains(key);
  }

  json sub(const char* key) {
    used_.insert(key);
    return j_.contains(key) ? j_.at(key) : json::object();
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.count(key)) {
        throw ConfigError("unknown key '" + name_ + "." + key + "'");
      }
    }
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> used_;
};

constexpr double kDegToRad = M_PI / 180.0;

TrialConfig parse_trial(const json& root) {
  Section top(root, "config");
  TrialConfig cfg;

  cfg.seed = top.get<uint64_t>("seed", 1);

  {
    Section gap(top.sub("gap"), "gap");
    cfg.gap.center = gap.get_vec3("center", Vec3(0.0, 0.0, 1.5));
    const double roll = gap.get<double>("roll_deg", 45.0) * kDegToRad;
    const double pitch = gap.get<double>("pitch_deg", 0.0) * kDegToRad;
    cfg.gap.orientation = gap_orientation(roll, pitch);
    cfg.gap.width = gap.get<double>("width", 0.8);
    cfg.gap.height = gap.get<double>("height", 0.28);
    cfg.approach_side = gap.get<int>("approach_side", 1);
    gap.finish();
  }
  {
    Section world(top.sub("world"), "world");
    cfg.world.gravity = world.get_vec3("gravity", Vec3(0.0, 0.0, -9.81));
    cfg.allow_nonstandard_gravity =
        world.get<bool>("allow_nonstandard_gravity", false);
    world.finish();
  }
  {
    Section veh(top.sub("vehicle"), "vehicle");
    cfg.vehicle.tip_to_tip = veh.get<double>("tip_to_tip", 0.55);
    cfg.vehicle.body_height = veh.get<double>("body_height", 0.12);
    cfg.vehicle.attitude_tau = veh.get<double>("attitude_tau", 0.04);
    Section lim(veh.sub("limits"), "vehicle.limits");
    cfg.vehicle.limits.f_min = lim.get<double>("f_min", 1.0);
    cfg.vehicle.limits.f_max = lim.get<double>("f_max", 20.0);
    cfg.vehicle.limits.omega_max = lim.get<double>("omega_max", 7.0);
    lim.finish();
    veh.finish();
  }
  {
    Section cam(top.sub("camera"), "camera");
    cfg.mount.k = cam.get<double>("k", 0.0);
    cfg.mount.fov_half = cam.get<double>("fov_half_deg", 90.0) * kDegToRad;
    cam.finish();
  }
  {
    Section sen(top.sub("sensor"), "sensor");
    cfg.sensor.sigma_pos0 = sen.get<double>("sigma_pos0", 0.005);
    cfg.sensor.sigma_rot0 = sen.get<double>("sigma_rot0", 0.0087);
    cfg.sensor.rate_hz = sen.get<double>("rate_hz", 30.0);
    cfg.sensor.p_dropout = sen.get<double>("p_dropout", 0.05);
    cfg.sensor.omega_blur = sen.get<double>("omega_blur", 7.0);
    cfg.sensor.range_min = sen.get<double>("range_min", 0.3);
    cfg.sensor.range_max = sen.get<double>("range_max", 8.0);
    sen.finish();
  }
  {
    Section imu(top.sub("imu"), "imu");
    cfg.imu.accel_std = imu.get<double>("accel_std", 0.05);
    cfg.imu.gyro_std = imu.get<double>("gyro_std", 0.005);
    cfg.imu.accel_bias_std = imu.get<double>("accel_bias_std", 0.2);
    cfg.imu.gyro_bias_std = imu.get<double>("gyro_bias_std", 0.01);
    imu.finish();
  }
  {
    Section trav(top.sub("traverse"), "traverse");
    cfg.v0_max = trav.get<double>("v0_max", 3.0);
    cfg.d_min = trav.get<double>("d_min", 0.25);
    cfg.v_nominal = trav.get<double>("v_nominal", 1.5);
    cfg.search_box.gamma_max = trav.get<double>("gamma_max", 2.0);
    cfg.search_box.d_max = trav.get<double>("d_max", 2.0);
    trav.finish();
  }
  {
    Section samp(top.sub("sampling"), "sampling");
    cfg.sampling.back_offset = samp.get<double>("back_offset", 3.5);
    cfg.sampling.half_extents =
        samp.get_vec3("half_extents", Vec3(1.0, 1.0, 0.5));
    cfg.sampling.time_lo = samp.get<double>("time_lo", 1.5);
    cfg.sampling.time_hi = samp.get<double>("time_hi", 4.0);
    cfg.sampling.position_counts[0] = samp.get<int>("count_x", 10);
    cfg.sampling.position_counts[1] = samp.get<int>("count_y", 10);
    cfg.sampling.position_counts[2] = samp.get<int>("count_z", 5);
    cfg.sampling.time_count = samp.get<int>("count_t", 8);
    cfg.sampling.theta_norm =
        samp.get<double>("theta_norm_deg", 10.0) * kDegToRad;
    cfg.sampling.dist_norm = samp.get<double>("dist_norm", 4.0);
    cfg.sampling.cost_samples = samp.get<int>("cost_samples", 20);
    samp.finish();
  }
  {
    Section ctl(top.sub("control"), "control");
    cfg.control_rate_hz = ctl.get<double>("control_rate_hz", 50.0);
    cfg.sim_rate_hz = ctl.get<double>("sim_rate_hz", 1000.0);
    cfg.gains.kp = ctl.get<double>("kp", 10.0);
    cfg.gains.kv = ctl.get<double>("kv", 6.0);
    cfg.gains.k_att = ctl.get<double>("k_att", 12.0);
    ctl.finish();
  }
  {
    Section trial(top.sub("trial"), "trial");
    cfg.blackout_tail_s = trial.get<double>("blackout_tail_s", 0.0);
    cfg.terminal_speed_limit = trial.get<double>("terminal_speed_limit", 6.0);
    cfg.record_series = trial.get<bool>("record_series", true);
    trial.finish();
  }
  top.sub("batch");  // consumed by parse_batch_spec
  top.finish();

  cfg.validate();
  return cfg;
}

json parse_document(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TrialConfig parse_trial_config(const std::string& json_text) {
  return parse_trial(parse_document(json_text));
}

TrialConfig load_trial_config(const std::string& path) {
  return parse_trial_config(read_file(path));
}

BatchSpec parse_batch_spec(const std::string& json_text,
                           const std::string& output_dir) {
  const json root = parse_document(json_text);
  BatchSpec spec;
  spec.base = parse_trial(root);
  spec.output_dir = output_dir;

  Section batch(root.contains("batch") ? root.at("batch") : json::object(),
                "batch");
  spec.trials_per_orientation = batch.get<int>("trials_per_orientation", 5);
  spec.base_seed = batch.get<uint64_t>("base_seed", spec.base.seed);
  spec.max_roll_deg = batch.get<double>("max_roll_deg", 90.0);
  spec.max_pitch_deg = batch.get<double>("max_pitch_deg", 90.0);
  if (batch.has("orientations_deg")) {
    const json arr = batch.sub("orientations_deg");
    if (!arr.is_array()) {
      throw ConfigError("batch.orientations_deg must be an array");
    }
    for (const auto& pair : arr) {
      if (!pair.is_array() || pair.size() != 2) {
        throw ConfigError("each orientation must be [roll_deg, pitch_deg]");
      }
      spec.orientations_deg.emplace_back(pair[0].get<double>(),
                                         pair[1].get<double>());
    }
  } else {
    for (double roll : {0.0, 15.0, 30.0, 45.0}) {
      for (double pitch : {0.0, 15.0, 30.0}) {
        spec.orientations_deg.emplace_back(roll, pitch);
      }
    }
  }
  batch.finish();
  spec.validate();
  return spec;
}

BatchSpec load_batch_spec(const std::string& path,
                          const std::string& output_dir) {
  return parse_batch_spec(read_file(path), output_dir);
}

std::string default_config_json() {
  return R"({
  "seed": 1,
  "gap": {
    "center": [0.0, 0.0, 1.5],
    "roll_deg": 45.0,
    "pitch_deg": 0.0,
    "width": 0.8,
    "height": 0.28,
    "approach_side": 1
  },
  "world": {
    "gravity": [0.0, 0.0, -9.81],
    "allow_nonstandard_gravity": false
  },
  "vehicle": {
    "tip_to_tip": 0.55,
    "body_height": 0.12,
    "attitude_tau": 0.04,
    "limits": {"f_min": 1.0, "f_max": 20.0, "omega_max": 7.0}
  },
  "camera": {"k": 0.0, "fov_half_deg": 90.0},
  "sensor": {
    "sigma_pos0": 0.005,
    "sigma_rot0": 0.0087,
    "rate_hz": 30.0,
    "p_dropout": 0.05,
    "omega_blur": 7.0,
    "range_min": 0.3,
    "range_max": 8.0
  },
  "imu": {
    "accel_std": 0.05,
    "gyro_std": 0.005,
    "accel_bias_std": 0.2,
    "gyro_bias_std": 0.01
  },
  "traverse": {
    "v0_max": 3.0,
    "d_min": 0.25,
    "v_nominal": 1.5,
    "gamma_max": 2.0,
    "d_max": 2.0
  },
  "sampling": {
    "back_offset": 3.5,
    "half_extents": [1.0, 1.0, 0.5],
    "time_lo": 1.5,
    "time_hi": 4.0,
    "count_x": 10,
    "count_y": 10,
    "count_z": 5,
    "count_t": 8,
    "theta_norm_deg": 10.0,
    "dist_norm": 4.0,
    "cost_samples": 20
  },
  "control": {
    "control_rate_hz": 50.0,
    "sim_rate_hz": 1000.0,
    "kp": 10.0,
    "kv": 6.0,
    "k_att": 12.0
  },
  "trial": {
    "blackout_tail_s": 0.0,
    "terminal_speed_limit": 6.0,
    "record_series": true
  },
  "batch": {
    "orientations_deg": [[0,0],[0,15],[0,30],[15,0],[15,15],[15,30],
                         [30,0],[30,15],[30,30],[45,0],[45,15],[45,30]],
    "trials_per_orientation": 17,
    "base_seed": 1000,
    "max_roll_deg": 90.0,
    "max_pitch_deg": 90.0
  }
})";
}

}  // namespace gapflight
