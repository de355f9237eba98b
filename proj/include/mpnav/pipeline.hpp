#pragma once

#include "mpnav/eval.hpp"
#include "mpnav/fusion.hpp"
#include "mpnav/identify.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

/// End-to-end runs: synthesis, gating, fixes and fusion over a scenario, plus
/// the outage, noise and drift experiments built on top of them.
namespace mpnav::eval {

struct Rates {
  double imu_hz = 100.0;
  double obs_hz = 10.0;
  double odo_hz = 10.0;
};

struct FilterConfig {
  double alpha = 0.5;
  double beta = 2.0;
  double kappa = 0.0;
  double p0_pos = 1.0;             // m, 1-sigma
  double p0_vel = 0.2;             // m/s
  double p0_att = deg2rad(1.0);    // rad
  double bias_walk = 1e-12;        // bias random-walk density
  double r_floor = 1e-4;           // m^2, added to every fix covariance
  double nis_gate = fusion::kNisGate3Dof;
  // Consecutive epochs in which every LoS fix is refused before the filter
  // re-anchors on them. Zero disables.
  int reset_after = 20;
};

struct NamedOutage {
  int id = 0;
  synth::OutageWindow window;
};

struct OutageSweepSpec {
  int seeds = 20;
  std::vector<NamedOutage> windows;
};

struct NoiseSweepSpec {
  int seeds = 20;
  // Each level varies one domain; the other stays at the scenario noise.
  std::vector<double> range_variances;  // m^2
  std::vector<double> angle_variances;  // deg^2
  std::vector<synth::OutageWindow> outages;
  double duration = 0.0;  // s; zero runs the whole trajectory
};

struct Scenario {
  std::string name = "scenario";
  synth::World world;
  std::vector<scene::Pose> truth;  // uniform grid at rates.imu_hz
  Rates rates;
  synth::NoiseCfg noise;
  std::vector<synth::OutageWindow> outages;
  synth::ImuGrade imu;
  synth::OdoErrors odo;
  synth::PathLossModel path_loss;
  identify::GateConfig gates;
  FilterConfig filter;
  synth::ObservationOptions observations;
  bool with_sbr = true;
  OutageSweepSpec outage_sweep;
  NoiseSweepSpec noise_sweep;
  int drift_seeds = 20;
  // Noisy observations ingested from a measurement log; when non-empty they
  // replace synthesis and noise injection.
  std::vector<synth::Epoch> recorded;

  void validate() const;
  const scene::BaseStation& base_station(const std::string& id) const;
};

/// Observations on the observation grid, computed once per scenario and
/// shared by every run. They are noise-free unless they came from a recorded
/// log, in which case runs use them as they are.
struct ObservationCache {
  std::vector<std::size_t> truth_index;
  std::vector<synth::Epoch> epochs;
  bool recorded = false;
};

ObservationCache synthesize_observations(const Scenario& sc);

/// Filter parameters a run of this scenario uses.
fusion::UkfParams ukf_params(const Scenario& sc);

struct EpochRecord;

/// Called after every processed epoch with the posterior and its record.
using EpochObserver = std::function<void(const fusion::FilterState&, const EpochRecord&)>;

struct RunOptions {
  bool with_sbr = true;
  std::uint64_t seed = 0;
  synth::NoiseCfg noise;  // variances; the seed field is ignored
  std::vector<synth::OutageWindow> outages;
  bool perturb_initial = false;  // draw the initial error from P0
  bool record_states = false;
  double t_end = std::numeric_limits<double>::infinity();
  EpochObserver observer;  // optional
};

struct EpochRecord {
  double t = 0.0;
  Vec3 p_est = Vec3::Zero();
  Vec3 p_true = Vec3::Zero();
  double e3d = 0.0;
  bool outage = false;
  int los_used = 0;
  int sbr_used = 0;
  identify::GateCounts gates;
  // Filled when RunOptions::record_states is set.
  fusion::StateVec x = fusion::StateVec::Zero();
  Vec3 rpy = Vec3::Zero();
  fusion::StateVec p_diag = fusion::StateVec::Zero();
};

struct RunReport {
  std::string run;
  std::uint64_t seed = 0;
  bool with_sbr = true;
  std::vector<EpochRecord> epochs;
  identify::GateCounts gates;
  long filter_resets = 0;
  double rmse_3d = 0.0;
  double max_error_pct = 0.0;
  std::vector<CdfPoint> cdf;
  double min_eigenvalue = std::numeric_limits<double>::infinity();
  double final_nees = 0.0;

  std::vector<TimedPoint> estimates() const;
  std::vector<double> errors() const;
};

RunReport run_single(const Scenario& sc, const ObservationCache& cache, const RunOptions& opt);

/// The observations a run with these options consumes, after noise and
/// outages, up to opt.t_end.
std::vector<synth::Epoch> run_observations(const ObservationCache& cache,
                                           const std::vector<scene::Pose>& truth,
                                           const RunOptions& opt);

struct OutageRow {
  int id = 0;
  double duration = 0.0;     // s
  double distance = 0.0;     // m
  double mean_speed = 0.0;   // m/s
  // Per seed, in seed order.
  std::vector<double> rms_without, pct_without, rms_with, pct_with;
};

struct OutageSweepResult {
  std::vector<OutageRow> rows;
  std::vector<std::uint64_t> seeds;
  RunReport first_without;  // reports of the first seed, for the CSV dump
  RunReport first_with;
};

/// One run per seed with every outage window active, in both arms with
/// common random numbers; metrics are taken per window.
OutageSweepResult run_outage_sweep(const Scenario& sc, const ObservationCache& cache,
                                   std::uint64_t base_seed);

struct NoiseLevel {
  std::string domain;  // "range" or "angle"
  double variance = 0.0;
  std::vector<double> median_without, median_with;  // per seed
  std::vector<double> pooled_without, pooled_with;  // all epoch errors
};

struct NoiseSweepResult {
  std::vector<NoiseLevel> levels;
  std::vector<std::uint64_t> seeds;
};

NoiseSweepResult run_noise_sweep(const Scenario& sc, const ObservationCache& cache,
                                 std::uint64_t base_seed);

struct DriftRow {
  double t = 0.0;
  double median = 0.0;
  double p25 = 0.0;
  double p75 = 0.0;
};

/// Ensemble free-inertial drift: one IMU error draw per seed, reported at the
/// observation rate.
std::vector<DriftRow> run_drift_profile(const Scenario& sc, std::uint64_t base_seed);

/// Truth navigation state at a grid index, with the run's sensor biases.
ins::NavState truth_state(const scene::Pose& pose, const synth::ImuErrors& errors);

/// The IMU error realisation a run with this seed uses.
synth::ImuErrors imu_errors_for(const Scenario& sc, std::uint64_t seed);

}  // namespace mpnav::eval
