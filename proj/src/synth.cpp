#include "mpnav/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace mpnav::synth {

Rng make_stream(std::uint64_t seed, std::uint64_t stream_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_id),
                    static_cast<std::uint32_t>(stream_id >> 32), 0x5eedu};
  return Rng(seq);
}

double NoiseCfg::sigma_range() const { return std::sqrt(var_range); }
double NoiseCfg::sigma_angle_rad() const { return deg2rad(std::sqrt(var_angle)); }

double PathLossModel::rss_at(double distance) const {
  return tx_power - pl0 - 10.0 * exponent * std::log10(distance / 1.0);
}

double PathLossModel::distance_for(double rss) const {
  return std::pow(10.0, (tx_power - pl0 - rss) / (10.0 * exponent));
}

void PathLossModel::validate() const {
  if (!(exponent > 0.0)) throw ConfigError("path-loss exponent must be positive");
  if (!std::isfinite(pl0) || !std::isfinite(tx_power)) {
    throw ConfigError("path-loss parameters must be finite");
  }
  if (!(reflection_loss_db >= 0.0)) throw ConfigError("reflection loss must be >= 0");
}

ImuErrors ImuGrade::draw(Rng& rng) const {
  std::normal_distribution<double> n01(0.0, 1.0);
  ImuErrors e;
  for (int i = 0; i < 3; ++i) e.gyro_bias[i] = gyro_bias_sigma * n01(rng);
  for (int i = 0; i < 3; ++i) e.accel_bias[i] = accel_bias_sigma * n01(rng);
  e.gyro_noise = gyro_noise;
  e.accel_noise = accel_noise;
  return e;
}

LosObs synth_los(const scene::BaseStation& bs, const scene::Pose& pose,
                 const PathLossModel& plm) {
  const Vec3 delta = pose.p - bs.p;
  const double d = delta.norm();
  if (!(d > 0.0)) throw GeometryError("UE coincides with BS '" + bs.id + "'");
  const AzEl aod = direction_angles(delta);
  const AzEl aoa = direction_angles(-delta);
  LosObs obs;
  obs.bs_id = bs.id;
  obs.t = pose.t;
  obs.rtt = 2.0 * d / kSpeedOfLight;
  obs.aod_az = aod.az;
  obs.aod_el = aod.el;
  obs.aoa_az = aoa.az;
  obs.aoa_el = aoa.el;
  obs.rss = plm.rss_at(d);
  return obs;
}

namespace {

SbrObs reflected_obs(const std::string& bs_id, double t, double length,
                     const Vec3& u_d, const Vec3& u_a, double loss_db,
                     int bounces, const PathLossModel& plm) {
  const AzEl aod = direction_angles(u_d);
  const AzEl aoa = direction_angles(u_a);
  SbrObs obs;
  obs.bs_id = bs_id;
  obs.t = t;
  obs.toa = length / kSpeedOfLight;
  obs.aod_az = aod.az;
  obs.aod_el = aod.el;
  obs.aoa_az = aoa.az;
  obs.aoa_el = aoa.el;
  obs.rss = plm.rss_at(length) - loss_db;
  obs.truth_bounces = bounces;
  return obs;
}

// Leg check that ignores the walls holding its end points: the segment is
// pulled back from each bounce point by a hair.
bool leg_clear(const Vec3& from, const Vec3& to, bool from_bounce, bool to_bounce,
               std::span<const scene::Wall> walls) {
  constexpr double kPullback = 1e-7;
  const Vec3 dir = (to - from).normalized();
  const Vec3 a = from_bounce ? Vec3(from + kPullback * dir) : from;
  const Vec3 b = to_bounce ? Vec3(to - kPullback * dir) : to;
  return scene::segment_clear(a, b, walls);
}

bool path_clear(const scene::BaseStation& bs, const Vec3& ue,
                const std::vector<Vec3>& bounces, std::span<const scene::Wall> walls) {
  Vec3 prev = bs.p;
  bool prev_bounce = false;
  for (const Vec3& q : bounces) {
    if (!leg_clear(prev, q, prev_bounce, true, walls)) return false;
    prev = q;
    prev_bounce = true;
  }
  return leg_clear(prev, ue, prev_bounce, false, walls);
}

}  // namespace

SbrObs synth_sbr(const scene::SbrPath& path, const scene::Pose& pose,
                 const PathLossModel& plm) {
  return reflected_obs(path.bs_id, pose.t, path.length, path.u_d, path.u_a,
                       plm.reflection_loss_db, 1, plm);
}

SbrObs synth_reflected(const scene::MultiBouncePath& path, double t,
                       const PathLossModel& plm) {
  return reflected_obs(path.bs_id, t, path.length, path.u_d, path.u_a,
                       path.reflection_loss_db, path.bounces, plm);
}

Epoch synth_epoch(const World& world, const scene::Pose& pose,
                  const PathLossModel& plm, const ObservationOptions& options) {
  Epoch epoch;
  epoch.t = pose.t;
  const auto& walls = world.walls;
  for (const scene::BaseStation& bs : world.base_stations) {
    std::vector<scene::MultiBouncePath> reflected;
    if (options.max_bounces >= 1) {
      for (const scene::Wall& w : walls) {
        auto sbr = scene::specular_path(bs, pose.p, w);
        if (sbr && path_clear(bs, pose.p, {sbr->q}, walls)) {
          reflected.push_back(scene::as_multi_bounce(*sbr, w));
        }
      }
    }
    if (options.max_bounces >= 2) {
      for (const scene::Wall& w1 : walls) {
        for (const scene::Wall& w2 : walls) {
          if (&w1 == &w2) continue;
          auto dbl = scene::double_bounce_path(bs, pose.p, w1, w2);
          if (dbl && path_clear(bs, pose.p, dbl->bounce_points, walls)) {
            reflected.push_back(*dbl);
          }
        }
      }
    }

    if (scene::los_visible(bs, pose.p, walls)) {
      epoch.los.push_back(synth_los(bs, pose, plm));
    } else if (options.nlos_first_arrival && !reflected.empty()) {
      const auto first = std::min_element(
          reflected.begin(), reflected.end(),
          [](const auto& a, const auto& b) { return a.length < b.length; });
      const SbrObs r = synth_reflected(*first, pose.t, plm);
      LosObs obs;
      obs.bs_id = bs.id;
      obs.t = pose.t;
      obs.rtt = 2.0 * r.toa;
      obs.aod_az = r.aod_az;
      obs.aod_el = r.aod_el;
      obs.aoa_az = r.aoa_az;
      obs.aoa_el = r.aoa_el;
      obs.rss = r.rss;
      obs.truth_los = false;
      epoch.los.push_back(obs);
    }
    for (const auto& path : reflected) {
      epoch.sbr.push_back(synth_reflected(path, pose.t, plm));
    }
  }
  return epoch;
}

namespace {

void validate(const NoiseCfg& cfg) {
  if (!(cfg.var_range >= 0.0) || !(cfg.var_angle >= 0.0)) {
    throw ConfigError("noise variances must be non-negative");
  }
}

// Five standard normal draws are consumed per record whatever the variances,
// so streams stay aligned across noise levels (common random numbers).
struct Draws {
  double range, aod_az, aod_el, aoa_az, aoa_el;
};

Draws draw(Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Draws d{};
  d.range = n01(rng);
  d.aod_az = n01(rng);
  d.aod_el = n01(rng);
  d.aoa_az = n01(rng);
  d.aoa_el = n01(rng);
  return d;
}

template <typename Obs>
void perturb_angles(Obs& obs, const Draws& d, double sigma) {
  if (sigma == 0.0) return;
  obs.aod_az = wrap_pi(obs.aod_az + sigma * d.aod_az);
  obs.aoa_az = wrap_pi(obs.aoa_az + sigma * d.aoa_az);
  obs.aod_el = std::clamp(obs.aod_el + sigma * d.aod_el, -kPi / 2, kPi / 2);
  obs.aoa_el = std::clamp(obs.aoa_el + sigma * d.aoa_el, -kPi / 2, kPi / 2);
}

}  // namespace

LosObs apply_noise(LosObs obs, const NoiseCfg& cfg, Rng& rng) {
  validate(cfg);
  const Draws d = draw(rng);
  const double sr = cfg.sigma_range();
  if (sr != 0.0) {
    obs.rtt += 2.0 * sr * d.range / kSpeedOfLight;
    obs.rtt = std::max(obs.rtt, std::numeric_limits<double>::min());
  }
  perturb_angles(obs, d, cfg.sigma_angle_rad());
  return obs;
}

SbrObs apply_noise(SbrObs obs, const NoiseCfg& cfg, Rng& rng) {
  validate(cfg);
  const Draws d = draw(rng);
  const double sr = cfg.sigma_range();
  if (sr != 0.0) {
    obs.toa += sr * d.range / kSpeedOfLight;
    obs.toa = std::max(obs.toa, std::numeric_limits<double>::min());
  }
  perturb_angles(obs, d, cfg.sigma_angle_rad());
  return obs;
}

Epoch apply_noise(Epoch epoch, const NoiseCfg& cfg, std::uint64_t stream_id) {
  Rng rng = make_stream(cfg.seed, stream_id);
  for (LosObs& o : epoch.los) o = apply_noise(std::move(o), cfg, rng);
  for (SbrObs& o : epoch.sbr) o = apply_noise(std::move(o), cfg, rng);
  return epoch;
}

bool in_outage(double t, std::span<const OutageWindow> windows) {
  return std::any_of(windows.begin(), windows.end(), [t](const OutageWindow& w) {
    return t >= w.t_start && t <= w.t_end;
  });
}

Epoch apply_outages(Epoch epoch, std::span<const OutageWindow> windows) {
  std::erase_if(epoch.los, [&](const LosObs& o) { return in_outage(o.t, windows); });
  return epoch;
}

std::vector<ImuSample> synth_imu(std::span<const scene::Pose> trajectory,
                                 const ImuErrors& errors, double rate, Rng& rng) {
  if (trajectory.size() < 3) throw ConfigError("IMU synthesis needs >= 3 trajectory samples");
  if (!(rate > 0.0)) throw ConfigError("IMU rate must be positive");
  const double dt = 1.0 / rate;
  std::normal_distribution<double> n01(0.0, 1.0);

  std::vector<ImuSample> out;
  out.reserve(trajectory.size() - 1);
  for (std::size_t k = 0; k + 1 < trajectory.size(); ++k) {
    const scene::Pose& a = trajectory[k];
    const scene::Pose& b = trajectory[k + 1];
    if (std::abs((b.t - a.t) - dt) > 1e-9) {
      throw ConfigError("trajectory grid does not match the IMU rate");
    }
    const Quat qa = quat_from_rpy(a.att);
    const Quat qb = quat_from_rpy(b.att);
    const Vec3 rotvec = quat_log(qa.conjugate() * qb);
    const Quat q_mid = qa * quat_exp(0.5 * rotvec);
    // Velocity difference is the central difference about the interval
    // midpoint, matching the midpoint attitude used for resolving.
    const Vec3 accel_nav = (b.v - a.v) / dt;

    ImuSample s;
    s.t = a.t;
    s.gyro = rotvec / dt + errors.gyro_bias;
    s.accel = q_mid.conjugate() * (accel_nav - gravity_enu()) + errors.accel_bias;
    for (int i = 0; i < 3; ++i) s.gyro[i] += errors.gyro_noise * n01(rng);
    for (int i = 0; i < 3; ++i) s.accel[i] += errors.accel_noise * n01(rng);
    out.push_back(s);
  }
  return out;
}

std::vector<OdoSample> synth_odo(std::span<const scene::Pose> trajectory,
                                 double rate, const OdoErrors& errors, Rng& rng) {
  if (trajectory.size() < 3) throw ConfigError("odometer synthesis needs >= 3 trajectory samples");
  if (!(rate > 0.0)) throw ConfigError("odometer rate must be positive");
  const double spacing = trajectory[1].t - trajectory[0].t;
  const auto stride = std::max<long>(1, std::lround((1.0 / rate) / spacing));
  std::normal_distribution<double> n01(0.0, 1.0);

  std::vector<OdoSample> out;
  for (std::size_t k = 0; k < trajectory.size(); k += static_cast<std::size_t>(stride)) {
    const scene::Pose& p = trajectory[k];
    const double noise = errors.noise * n01(rng);
    out.push_back({p.t, std::max(0.0, p.v.norm() + noise)});
  }
  return out;
}

}  // namespace mpnav::synth
