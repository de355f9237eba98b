#pragma once

#include "mpnav/scene.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

/// Forward model: channel observables, inertial and odometer streams, noise
/// and outage injection.
namespace mpnav::synth {

using Rng = std::mt19937_64;

/// Deterministic engine for an independent stream, e.g. one per epoch.
Rng make_stream(std::uint64_t seed, std::uint64_t stream_id);

/// LoS channel record: two-way RTT plus AoD at the BS and AoA at the UE, both
/// in global axes.
struct LosObs {
  std::string bs_id;
  double t = 0.0;
  double rtt = 0.0;  // s, two-way
  double aod_az = 0.0, aod_el = 0.0;
  double aoa_az = 0.0, aoa_el = 0.0;
  double rss = 0.0;  // dBm
  // Ground truth, hidden from the estimator: false when the record was
  // produced by a reflected first arrival of a blocked BS.
  bool truth_los = true;
};

struct SbrObs {
  std::string bs_id;
  double t = 0.0;
  double toa = 0.0;  // s, one-way
  double aod_az = 0.0, aod_el = 0.0;
  double aoa_az = 0.0, aoa_el = 0.0;
  double rss = 0.0;
  int truth_bounces = 1;  // ground truth, hidden from the estimator
};

/// Measurement noise: range variance in m^2, angle variance in deg^2.
struct NoiseCfg {
  double var_range = 0.0;
  double var_angle = 0.0;
  std::uint64_t seed = 0;

  double sigma_range() const;
  double sigma_angle_rad() const;
};

struct OutageWindow {
  double t_start = 0.0;
  double t_end = 0.0;
};

/// Log-distance path loss referenced to d0 = 1 m. pl0 defaults to free space
/// at 28 GHz.
struct PathLossModel {
  double pl0 = 61.4;            // dB at 1 m
  double exponent = 2.0;
  double tx_power = 30.0;       // dBm
  double reflection_loss_db = 6.0;  // per bounce

  /// RSS for a total propagation length, before any reflection loss.
  double rss_at(double distance) const;
  /// Inverse of rss_at.
  double distance_for(double rss) const;
  void validate() const;
};

struct ImuSample {
  double t = 0.0;
  Vec3 gyro = Vec3::Zero();   // rad/s, body
  Vec3 accel = Vec3::Zero();  // m/s^2 specific force, body
};

struct OdoSample {
  double t = 0.0;
  double speed = 0.0;  // m/s
};

/// Per-run sensor error realisation: constant bias plus white noise.
struct ImuErrors {
  Vec3 gyro_bias = Vec3::Zero();   // rad/s
  Vec3 accel_bias = Vec3::Zero();  // m/s^2
  double gyro_noise = 0.0;         // rad/s, per-sample std
  double accel_noise = 0.0;        // m/s^2, per-sample std
};

/// Sensor grade: standard deviations from which ImuErrors are drawn.
struct ImuGrade {
  double gyro_bias_sigma = deg2rad(0.05);  // rad/s
  double accel_bias_sigma = 0.03;          // m/s^2
  double gyro_noise = deg2rad(0.05);       // rad/s per sample
  double accel_noise = 0.02;               // m/s^2 per sample

  ImuErrors draw(Rng& rng) const;
};

struct OdoErrors {
  double noise = 0.05;  // m/s per sample
};

struct Epoch {
  double t = 0.0;
  std::vector<LosObs> los;
  std::vector<SbrObs> sbr;
};

struct World {
  std::vector<scene::BaseStation> base_stations;
  std::vector<scene::Wall> walls;
};

struct ObservationOptions {
  int max_bounces = 2;
  // Emit an RTT record from the earliest reflected arrival when the direct
  // path of a BS is blocked.
  bool nlos_first_arrival = true;
};

LosObs synth_los(const scene::BaseStation& bs, const scene::Pose& pose,
                 const PathLossModel& plm);

SbrObs synth_sbr(const scene::SbrPath& path, const scene::Pose& pose,
                 const PathLossModel& plm);

/// Reflected observation for a path with any bounce count; the RSS uses the
/// path's accumulated reflection loss.
SbrObs synth_reflected(const scene::MultiBouncePath& path, double t,
                       const PathLossModel& plm);

/// Noise-free observations of every BS at the pose.
Epoch synth_epoch(const World& world, const scene::Pose& pose,
                  const PathLossModel& plm, const ObservationOptions& options);

LosObs apply_noise(LosObs obs, const NoiseCfg& cfg, Rng& rng);
SbrObs apply_noise(SbrObs obs, const NoiseCfg& cfg, Rng& rng);
/// Applies noise to every record of the epoch from its own stream
/// (cfg.seed, stream_id).
Epoch apply_noise(Epoch epoch, const NoiseCfg& cfg, std::uint64_t stream_id);

bool in_outage(double t, std::span<const OutageWindow> windows);
/// Drops LoS records inside any closed outage window; SBR records pass.
Epoch apply_outages(Epoch epoch, std::span<const OutageWindow> windows);

/// IMU stream from poses on a uniform grid. Sample k describes the interval
/// [t_k, t_k+1], so n poses give n - 1 samples.
std::vector<ImuSample> synth_imu(std::span<const scene::Pose> trajectory,
                                 const ImuErrors& errors, double rate, Rng& rng);

std::vector<OdoSample> synth_odo(std::span<const scene::Pose> trajectory,
                                 double rate, const OdoErrors& errors, Rng& rng);

}  // namespace mpnav::synth
