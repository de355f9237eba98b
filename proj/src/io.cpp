#include "mpnav/io.hpp"

#include "mpnav/trajectory.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace mpnav::io {

using nlohmann::json;

namespace {

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items()) {
    if (!ok.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

double num(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(where + ": '" + key + "' must be a number");
  return v.get<double>();
}

double num_or(const json& obj, const char* key, double fallback, const std::string& where) {
  return obj.contains(key) ? num(obj, key, where) : fallback;
}

int int_or(const json& obj, const char* key, int fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) throw ConfigError(where + ": '" + key + "' must be an integer");
  return v.get<int>();
}

bool bool_or(const json& obj, const char* key, bool fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) throw ConfigError(where + ": '" + key + "' must be a boolean");
  return v.get<bool>();
}

std::string str(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || !obj.at(key).is_string()) {
    throw ConfigError(where + ": '" + key + "' must be a string");
  }
  return obj.at(key).get<std::string>();
}

template <int N>
Eigen::Matrix<double, N, 1> vec(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
  const json& v = obj.at(key);
  if (!v.is_array() || v.size() != N) {
    throw ConfigError(where + ": '" + key + "' must be an array of " + std::to_string(N) +
                      " numbers");
  }
  Eigen::Matrix<double, N, 1> out;
  for (int i = 0; i < N; ++i) {
    if (!v[static_cast<std::size_t>(i)].is_number()) {
      throw ConfigError(where + ": '" + key + "' must contain numbers");
    }
    out(i) = v[static_cast<std::size_t>(i)].get<double>();
  }
  return out;
}

std::vector<double> num_list(const json& obj, const char* key, const std::string& where) {
  std::vector<double> out;
  if (!obj.contains(key)) return out;
  const json& v = obj.at(key);
  if (!v.is_array()) throw ConfigError(where + ": '" + key + "' must be an array");
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError(where + ": '" + key + "' must contain numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

const json& array_at(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || !obj.at(key).is_array()) {
    throw ConfigError(where + ": '" + key + "' must be an array");
  }
  return obj.at(key);
}

synth::OutageWindow window_from(const json& o, const std::string& where) {
  synth::OutageWindow w{num(o, "t_start_s", where), num(o, "t_end_s", where)};
  if (!(w.t_end > w.t_start)) throw ConfigError(where + ": t_end_s must exceed t_start_s");
  return w;
}

std::vector<synth::OutageWindow> windows_from(const json& parent, const char* key,
                                              const std::string& where) {
  std::vector<synth::OutageWindow> out;
  if (!parent.contains(key)) return out;
  for (const auto& o : array_at(parent, key, where)) {
    check_keys(o, {"t_start_s", "t_end_s"}, where + "." + key);
    out.push_back(window_from(o, where + "." + key));
  }
  return out;
}

std::vector<scene::Pose> trajectory_from(const json& t, double imu_hz) {
  const std::string where = "trajectory";
  check_keys(t, {"waypoints", "samples"}, where);
  if (t.contains("waypoints") == t.contains("samples")) {
    throw ConfigError("trajectory: give exactly one of 'waypoints' or 'samples'");
  }
  if (t.contains("waypoints")) {
    const json& w = t.at("waypoints");
    const std::string ww = where + ".waypoints";
    check_keys(w, {"points_en_m", "closed", "corner_radius_m", "height_m", "start_offset_m",
                   "speed_profile", "duration_s"},
               ww);
    scene::WaypointSpec spec;
    for (const auto& p : array_at(w, "points_en_m", ww)) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
        throw ConfigError(ww + ": points_en_m entries must be [east, north]");
      }
      spec.points.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    spec.closed = bool_or(w, "closed", spec.closed, ww);
    spec.corner_radius = num_or(w, "corner_radius_m", spec.corner_radius, ww);
    spec.height = num_or(w, "height_m", spec.height, ww);
    spec.start_offset = num_or(w, "start_offset_m", spec.start_offset, ww);
    spec.duration = num(w, "duration_s", ww);
    for (const auto& k : array_at(w, "speed_profile", ww)) {
      check_keys(k, {"t_s", "speed_mps"}, ww + ".speed_profile");
      spec.speed_profile.push_back({num(k, "t_s", ww), num(k, "speed_mps", ww)});
    }
    return scene::sample_trajectory(spec, imu_hz);
  }
  std::vector<scene::Pose> poses;
  const std::string ws = where + ".samples";
  for (const auto& s : array_at(t, "samples", ws)) {
    check_keys(s, {"t_s", "p_enu_m", "v_enu_mps", "att_rpy_deg"}, ws);
    scene::Pose p;
    p.t = num(s, "t_s", ws);
    p.p = vec<3>(s, "p_enu_m", ws);
    p.v = vec<3>(s, "v_enu_mps", ws);
    const Vec3 att = vec<3>(s, "att_rpy_deg", ws);
    p.att = att.unaryExpr([](double d) { return deg2rad(d); });
    poses.push_back(p);
  }
  return scene::resample_poses(poses, imu_hz);
}

json obs_angles(double aod_az, double aod_el, double aoa_az, double aoa_el) {
  return {{"aod_az_deg", rad2deg(aod_az)},
          {"aod_el_deg", rad2deg(aod_el)},
          {"aoa_az_deg", rad2deg(aoa_az)},
          {"aoa_el_deg", rad2deg(aoa_el)}};
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

RunConfig run_config_from_json(const json& doc) {
  RunConfig rc;
  if (doc.contains("mode")) rc.mode = str(doc, "mode", "scenario");
  static const std::set<std::string> modes{"single", "outage-sweep", "noise-sweep",
                                           "drift-profile"};
  if (!modes.count(rc.mode)) throw ConfigError("scenario: unknown mode '" + rc.mode + "'");
  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned()) {
      throw ConfigError("scenario: 'seed' must be a non-negative integer");
    }
    rc.seed = doc.at("seed").get<std::uint64_t>();
  }
  rc.with_sbr = bool_or(doc, "with_sbr", rc.with_sbr, "scenario");
  if (doc.contains("output_dir")) rc.output_dir = str(doc, "output_dir", "scenario");
  return rc;
}

eval::Scenario scenario_from_json(const json& doc, const std::filesystem::path& base_dir) {
  check_keys(doc,
             {"name", "mode", "seed", "with_sbr", "output_dir", "base_stations", "walls",
              "trajectory", "rates", "noise", "outages", "imu", "odometer", "path_loss", "gates",
              "ukf", "observations", "outage_sweep", "noise_sweep", "drift_profile",
              "measurement_log"},
             "scenario");
  run_config_from_json(doc);

  eval::Scenario sc;
  if (doc.contains("name")) sc.name = str(doc, "name", "scenario");
  sc.with_sbr = bool_or(doc, "with_sbr", true, "scenario");

  if (doc.contains("rates")) {
    const json& r = doc.at("rates");
    check_keys(r, {"imu_hz", "obs_hz", "odo_hz"}, "rates");
    sc.rates.imu_hz = num_or(r, "imu_hz", sc.rates.imu_hz, "rates");
    sc.rates.obs_hz = num_or(r, "obs_hz", sc.rates.obs_hz, "rates");
    sc.rates.odo_hz = num_or(r, "odo_hz", sc.rates.odo_hz, "rates");
  }
  if (!(sc.rates.imu_hz > 0.0)) throw ConfigError("rates: imu_hz must be positive");

  if (doc.contains("path_loss")) {
    const json& p = doc.at("path_loss");
    check_keys(p, {"pl0_db", "exponent", "tx_power_dbm", "reflection_loss_db"}, "path_loss");
    sc.path_loss.pl0 = num_or(p, "pl0_db", sc.path_loss.pl0, "path_loss");
    sc.path_loss.exponent = num_or(p, "exponent", sc.path_loss.exponent, "path_loss");
    sc.path_loss.tx_power = num_or(p, "tx_power_dbm", sc.path_loss.tx_power, "path_loss");
    sc.path_loss.reflection_loss_db =
        num_or(p, "reflection_loss_db", sc.path_loss.reflection_loss_db, "path_loss");
  }
  sc.path_loss.validate();

  for (const auto& b : array_at(doc, "base_stations", "scenario")) {
    check_keys(b, {"id", "p_enu_m"}, "base_stations");
    sc.world.base_stations.push_back({str(b, "id", "base_stations"),
                                      vec<3>(b, "p_enu_m", "base_stations")});
  }
  if (doc.contains("walls")) {
    std::set<std::string> ids;
    for (const auto& w : array_at(doc, "walls", "scenario")) {
      check_keys(w, {"id", "a_en_m", "b_en_m", "z0_m", "height_m", "reflection_loss_db"},
                 "walls");
      const std::string id = str(w, "id", "walls");
      if (!ids.insert(id).second) throw ConfigError("walls: duplicate id '" + id + "'");
      sc.world.walls.emplace_back(
          id, vec<2>(w, "a_en_m", "walls"), vec<2>(w, "b_en_m", "walls"),
          num_or(w, "z0_m", 0.0, "walls"), num(w, "height_m", "walls"),
          num_or(w, "reflection_loss_db", sc.path_loss.reflection_loss_db, "walls"));
    }
  }

  if (!doc.contains("trajectory")) throw ConfigError("scenario: missing 'trajectory'");
  sc.truth = trajectory_from(doc.at("trajectory"), sc.rates.imu_hz);

  if (doc.contains("noise")) {
    const json& n = doc.at("noise");
    check_keys(n, {"var_range_m2", "var_angle_deg2"}, "noise");
    sc.noise.var_range = num_or(n, "var_range_m2", 0.0, "noise");
    sc.noise.var_angle = num_or(n, "var_angle_deg2", 0.0, "noise");
  }
  sc.outages = windows_from(doc, "outages", "scenario");

  if (doc.contains("imu")) {
    const json& m = doc.at("imu");
    const std::string w = "imu";
    check_keys(m, {"gyro_bias_sigma_dps", "accel_bias_sigma_mps2", "gyro_noise_dps",
                   "accel_noise_mps2"},
               w);
    sc.imu.gyro_bias_sigma =
        deg2rad(num_or(m, "gyro_bias_sigma_dps", rad2deg(sc.imu.gyro_bias_sigma), w));
    sc.imu.accel_bias_sigma = num_or(m, "accel_bias_sigma_mps2", sc.imu.accel_bias_sigma, w);
    sc.imu.gyro_noise = deg2rad(num_or(m, "gyro_noise_dps", rad2deg(sc.imu.gyro_noise), w));
    sc.imu.accel_noise = num_or(m, "accel_noise_mps2", sc.imu.accel_noise, w);
    if (!(sc.imu.gyro_bias_sigma >= 0.0 && sc.imu.accel_bias_sigma >= 0.0 &&
          sc.imu.gyro_noise >= 0.0 && sc.imu.accel_noise >= 0.0)) {
      throw ConfigError("imu: error sigmas must be non-negative");
    }
  }
  if (doc.contains("odometer")) {
    const json& o = doc.at("odometer");
    check_keys(o, {"noise_mps"}, "odometer");
    sc.odo.noise = num_or(o, "noise_mps", sc.odo.noise, "odometer");
    if (!(sc.odo.noise >= 0.0)) throw ConfigError("odometer: noise must be non-negative");
  }
  if (doc.contains("gates")) {
    const json& g = doc.at("gates");
    const std::string w = "gates";
    check_keys(g, {"range_consistency_m", "elevation_eps_deg", "residual_m", "motion_margin_m"},
               w);
    sc.gates.range_consistency_threshold =
        num_or(g, "range_consistency_m", sc.gates.range_consistency_threshold, w);
    sc.gates.elevation_consistency_eps =
        deg2rad(num_or(g, "elevation_eps_deg", rad2deg(sc.gates.elevation_consistency_eps), w));
    sc.gates.residual_threshold = num_or(g, "residual_m", sc.gates.residual_threshold, w);
    sc.gates.motion_margin = num_or(g, "motion_margin_m", sc.gates.motion_margin, w);
  }
  if (doc.contains("ukf")) {
    const json& u = doc.at("ukf");
    const std::string w = "ukf";
    check_keys(u, {"alpha", "beta", "kappa", "p0_pos_m", "p0_vel_mps", "p0_att_deg",
                   "bias_walk", "r_floor_m2", "nis_gate", "reset_after_epochs"},
               w);
    auto& f = sc.filter;
    f.alpha = num_or(u, "alpha", f.alpha, w);
    f.beta = num_or(u, "beta", f.beta, w);
    f.kappa = num_or(u, "kappa", f.kappa, w);
    f.p0_pos = num_or(u, "p0_pos_m", f.p0_pos, w);
    f.p0_vel = num_or(u, "p0_vel_mps", f.p0_vel, w);
    f.p0_att = deg2rad(num_or(u, "p0_att_deg", rad2deg(f.p0_att), w));
    f.bias_walk = num_or(u, "bias_walk", f.bias_walk, w);
    f.r_floor = num_or(u, "r_floor_m2", f.r_floor, w);
    f.nis_gate = num_or(u, "nis_gate", f.nis_gate, w);
    f.reset_after = int_or(u, "reset_after_epochs", f.reset_after, w);
  }
  if (doc.contains("observations")) {
    const json& o = doc.at("observations");
    check_keys(o, {"max_bounces", "nlos_first_arrival"}, "observations");
    sc.observations.max_bounces =
        int_or(o, "max_bounces", sc.observations.max_bounces, "observations");
    sc.observations.nlos_first_arrival =
        bool_or(o, "nlos_first_arrival", sc.observations.nlos_first_arrival, "observations");
  }
  if (doc.contains("outage_sweep")) {
    const json& o = doc.at("outage_sweep");
    const std::string w = "outage_sweep";
    check_keys(o, {"seeds", "windows"}, w);
    sc.outage_sweep.seeds = int_or(o, "seeds", sc.outage_sweep.seeds, w);
    if (o.contains("windows")) {
      for (const auto& x : array_at(o, "windows", w)) {
        check_keys(x, {"id", "t_start_s", "t_end_s"}, w + ".windows");
        sc.outage_sweep.windows.push_back(
            {int_or(x, "id", static_cast<int>(sc.outage_sweep.windows.size()) + 1, w),
             window_from(x, w + ".windows")});
      }
    }
  }
  if (doc.contains("noise_sweep")) {
    const json& n = doc.at("noise_sweep");
    const std::string w = "noise_sweep";
    check_keys(n, {"seeds", "range_variances_m2", "angle_variances_deg2", "outages", "duration_s"},
               w);
    sc.noise_sweep.seeds = int_or(n, "seeds", sc.noise_sweep.seeds, w);
    sc.noise_sweep.range_variances = num_list(n, "range_variances_m2", w);
    sc.noise_sweep.angle_variances = num_list(n, "angle_variances_deg2", w);
    sc.noise_sweep.outages = windows_from(n, "outages", w);
    sc.noise_sweep.duration = num_or(n, "duration_s", 0.0, w);
  }
  if (doc.contains("drift_profile")) {
    const json& d = doc.at("drift_profile");
    check_keys(d, {"seeds"}, "drift_profile");
    sc.drift_seeds = int_or(d, "seeds", sc.drift_seeds, "drift_profile");
  }
  if (doc.contains("measurement_log")) {
    std::filesystem::path log = str(doc, "measurement_log", "scenario");
    if (log.is_relative()) log = base_dir / log;
    std::ifstream in(log);
    if (!in) throw ConfigError("cannot open measurement log " + log.string());
    sc.recorded = read_measurement_log(in);
  }
  sc.validate();
  return sc;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("scenario file " + path.string() + " is not valid JSON: " + e.what());
  }
}

eval::Scenario load_scenario(const std::filesystem::path& path) {
  return scenario_from_json(read_json_file(path), path.parent_path());
}

void write_measurement_log(std::ostream& out, const std::vector<synth::Epoch>& epochs) {
  for (const synth::Epoch& e : epochs) {
    for (const synth::LosObs& o : e.los) {
      json j = {{"type", "los"}, {"bs_id", o.bs_id}, {"t_s", o.t}, {"rtt_s", o.rtt}};
      j.update(obs_angles(o.aod_az, o.aod_el, o.aoa_az, o.aoa_el));
      j["rss_dbm"] = o.rss;
      j["truth_los"] = o.truth_los;
      out << j.dump() << '\n';
    }
    for (const synth::SbrObs& o : e.sbr) {
      json j = {{"type", "sbr"}, {"bs_id", o.bs_id}, {"t_s", o.t}, {"toa_s", o.toa}};
      j.update(obs_angles(o.aod_az, o.aod_el, o.aoa_az, o.aoa_el));
      j["rss_dbm"] = o.rss;
      j["truth_bounces"] = o.truth_bounces;
      out << j.dump() << '\n';
    }
  }
}

std::vector<synth::Epoch> read_measurement_log(std::istream& in) {
  std::vector<synth::Epoch> epochs;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "measurement log line " + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ConfigError(where + ": " + e.what());
    }
    const std::string type = str(j, "type", where);
    const double t = num(j, "t_s", where);
    if (epochs.empty() || t > epochs.back().t) {
      epochs.push_back({t, {}, {}});
    } else if (t < epochs.back().t) {
      throw ConfigError(where + ": timestamps must be non-decreasing");
    }
    synth::Epoch& e = epochs.back();
    const double aod_az = deg2rad(num(j, "aod_az_deg", where));
    const double aod_el = deg2rad(num(j, "aod_el_deg", where));
    const double aoa_az = deg2rad(num(j, "aoa_az_deg", where));
    const double aoa_el = deg2rad(num(j, "aoa_el_deg", where));
    if (type == "los") {
      check_keys(j, {"type", "bs_id", "t_s", "rtt_s", "aod_az_deg", "aod_el_deg", "aoa_az_deg",
                     "aoa_el_deg", "rss_dbm", "truth_los"},
                 where);
      synth::LosObs o{str(j, "bs_id", where), t, num(j, "rtt_s", where), aod_az, aod_el,
                      aoa_az, aoa_el, num(j, "rss_dbm", where),
                      bool_or(j, "truth_los", true, where)};
      if (!(o.rtt > 0.0)) throw ConfigError(where + ": rtt_s must be positive");
      e.los.push_back(std::move(o));
    } else if (type == "sbr") {
      check_keys(j, {"type", "bs_id", "t_s", "toa_s", "aod_az_deg", "aod_el_deg", "aoa_az_deg",
                     "aoa_el_deg", "rss_dbm", "truth_bounces"},
                 where);
      synth::SbrObs o{str(j, "bs_id", where), t, num(j, "toa_s", where), aod_az, aod_el,
                      aoa_az, aoa_el, num(j, "rss_dbm", where),
                      int_or(j, "truth_bounces", 1, where)};
      if (!(o.toa > 0.0)) throw ConfigError(where + ": toa_s must be positive");
      e.sbr.push_back(std::move(o));
    } else {
      throw ConfigError(where + ": unknown record type '" + type + "'");
    }
  }
  return epochs;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out = open_out(tmp);
    out << content;
    if (!out) throw std::runtime_error("write failed for " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_errors_csv(const std::filesystem::path& path, const eval::RunReport& rep) {
  std::ostringstream os;
  os << "t_s,ex_m,ey_m,ez_m,e3d_m\n";
  for (const auto& e : rep.epochs) {
    const Vec3 d = e.p_est - e.p_true;
    os << fmt(e.t) << ',' << fmt(d.x()) << ',' << fmt(d.y()) << ',' << fmt(d.z()) << ','
       << fmt(e.e3d) << '\n';
  }
  write_text(path, os.str());
}

void write_cdf_csv(const std::filesystem::path& path, const std::vector<eval::CdfPoint>& cdf) {
  std::ostringstream os;
  os << "error_m,probability\n";
  for (const auto& c : cdf) os << fmt(c.error) << ',' << fmt(c.probability) << '\n';
  write_text(path, os.str());
}

void write_gates_csv(const std::filesystem::path& path, const eval::RunReport& rep) {
  std::ostringstream os;
  os << "t_s,outage,los_admitted,los_rejected,oori_admitted,oori_rejected,motion_admitted,"
        "motion_rejected,innovation_rejected,los_used,sbr_paths_used\n";
  for (const auto& e : rep.epochs) {
    const auto& g = e.gates;
    os << fmt(e.t) << ',' << (e.outage ? 1 : 0) << ',' << g.los_admitted << ','
       << g.los_rejected << ',' << g.oori_admitted << ',' << g.oori_rejected << ','
       << g.motion_admitted << ',' << g.motion_rejected << ',' << g.innovation_rejected << ','
       << e.los_used << ',' << e.sbr_used << '\n';
  }
  write_text(path, os.str());
}

void write_state_csv(const std::filesystem::path& path, const eval::RunReport& rep) {
  static const char* names[] = {"px_m", "py_m", "pz_m", "vx_mps", "vy_mps", "vz_mps",
                                "dthx_rad", "dthy_rad", "dthz_rad", "bgx_rps", "bgy_rps",
                                "bgz_rps", "bax_mps2", "bay_mps2", "baz_mps2"};
  std::ostringstream os;
  os << "t_s";
  for (int i = 0; i < fusion::kStateDim; ++i) {
    if (i >= fusion::kAtt && i < fusion::kAtt + 3) continue;
    os << ',' << names[i];
  }
  os << ",roll_deg,pitch_deg,yaw_deg";
  for (const char* n : names) os << ",var_" << n;
  os << '\n';
  for (const auto& e : rep.epochs) {
    os << fmt(e.t);
    for (int i = 0; i < fusion::kStateDim; ++i) {
      if (i >= fusion::kAtt && i < fusion::kAtt + 3) continue;
      os << ',' << fmt(e.x(i));
    }
    for (int i = 0; i < 3; ++i) os << ',' << fmt(rad2deg(e.rpy(i)));
    for (int i = 0; i < fusion::kStateDim; ++i) os << ',' << fmt(e.p_diag(i));
    os << '\n';
  }
  write_text(path, os.str());
}

void write_single_summary(const std::filesystem::path& path, const eval::RunReport& rep) {
  const auto errs = rep.errors();
  const auto& g = rep.gates;
  std::ostringstream os;
  os << "run,seed,with_sbr,epochs,rmse_3d_m,max_error_pct,median_error_m,p95_error_m,"
        "filter_resets,final_nees,los_admitted,los_rejected,oori_admitted,oori_rejected,"
        "motion_admitted,motion_rejected,innovation_rejected\n";
  os << rep.run << ',' << rep.seed << ',' << (rep.with_sbr ? 1 : 0) << ',' << rep.epochs.size()
     << ',' << fmt(rep.rmse_3d) << ',' << fmt(rep.max_error_pct) << ','
     << fmt(eval::median(errs)) << ',' << fmt(eval::quantile(errs, 0.95)) << ','
     << rep.filter_resets << ',' << fmt(rep.final_nees) << ',' << g.los_admitted << ','
     << g.los_rejected << ',' << g.oori_admitted << ',' << g.oori_rejected << ','
     << g.motion_admitted << ',' << g.motion_rejected << ',' << g.innovation_rejected << '\n';
  write_text(path, os.str());
}

void write_outage_summary(const std::filesystem::path& path, const eval::OutageSweepResult& r) {
  std::ostringstream os;
  os << "outage_id,duration_s,distance_m,mean_speed_mps,rms_without_m,pct_without,rms_with_m,"
        "pct_with\n";
  for (const auto& row : r.rows) {
    os << row.id << ',' << fmt(row.duration) << ',' << fmt(row.distance) << ','
       << fmt(row.mean_speed) << ',' << fmt(eval::median(row.rms_without)) << ','
       << fmt(eval::median(row.pct_without)) << ',' << fmt(eval::median(row.rms_with)) << ','
       << fmt(eval::median(row.pct_with)) << '\n';
  }
  write_text(path, os.str());
}

void write_outage_runs(const std::filesystem::path& path, const eval::OutageSweepResult& r) {
  std::ostringstream os;
  os << "seed,outage_id,rms_without_m,pct_without,rms_with_m,pct_with\n";
  for (std::size_t s = 0; s < r.seeds.size(); ++s) {
    for (const auto& row : r.rows) {
      os << r.seeds[s] << ',' << row.id << ',' << fmt(row.rms_without[s]) << ','
         << fmt(row.pct_without[s]) << ',' << fmt(row.rms_with[s]) << ','
         << fmt(row.pct_with[s]) << '\n';
    }
  }
  write_text(path, os.str());
}

void write_noise_summary(const std::filesystem::path& path, const eval::NoiseSweepResult& r) {
  std::ostringstream os;
  os << "domain,variance,median_without_m,median_with_m,p95_without_m,p95_with_m\n";
  for (const auto& l : r.levels) {
    os << l.domain << ',' << fmt(l.variance) << ',' << fmt(eval::median(l.pooled_without)) << ','
       << fmt(eval::median(l.pooled_with)) << ',' << fmt(eval::quantile(l.pooled_without, 0.95))
       << ',' << fmt(eval::quantile(l.pooled_with, 0.95)) << '\n';
  }
  write_text(path, os.str());
}

void write_noise_runs(const std::filesystem::path& path, const eval::NoiseSweepResult& r) {
  std::ostringstream os;
  os << "seed,domain,variance,median_without_m,median_with_m\n";
  for (std::size_t s = 0; s < r.seeds.size(); ++s) {
    for (const auto& l : r.levels) {
      os << r.seeds[s] << ',' << l.domain << ',' << fmt(l.variance) << ','
         << fmt(l.median_without[s]) << ',' << fmt(l.median_with[s]) << '\n';
    }
  }
  write_text(path, os.str());
}

void write_drift_csv(const std::filesystem::path& path, const std::vector<eval::DriftRow>& rows) {
  std::ostringstream os;
  os << "t_s,median_error_m,p25_error_m,p75_error_m\n";
  for (const auto& r : rows) {
    os << fmt(r.t) << ',' << fmt(r.median) << ',' << fmt(r.p25) << ',' << fmt(r.p75) << '\n';
  }
  write_text(path, os.str());
}

}  // namespace mpnav::io
