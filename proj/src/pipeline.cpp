#include "mpnav/pipeline.hpp"

#include "mpnav/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace mpnav::eval {

namespace {

// Stream ids above any epoch index.
constexpr std::uint64_t kImuErrorStream = (1ULL << 40) + 0;
constexpr std::uint64_t kImuNoiseStream = (1ULL << 40) + 1;
constexpr std::uint64_t kOdoStream = (1ULL << 40) + 2;
constexpr std::uint64_t kInitStream = (1ULL << 40) + 3;

using fusion::FilterState;
using fusion::StateMat;
using fusion::StateVec;

std::size_t observation_stride(const Rates& r) {
  const double ratio = r.imu_hz / r.obs_hz;
  const double stride = std::round(ratio);
  if (stride < 1.0 || std::abs(ratio - stride) > 1e-9) {
    throw ConfigError("IMU rate must be an integer multiple of the observation rate");
  }
  return static_cast<std::size_t>(stride);
}

StateMat initial_covariance(const Scenario& sc) {
  StateVec d;
  const auto& f = sc.filter;
  d.segment<3>(fusion::kPos).setConstant(f.p0_pos * f.p0_pos);
  d.segment<3>(fusion::kVel).setConstant(f.p0_vel * f.p0_vel);
  d.segment<3>(fusion::kAtt).setConstant(f.p0_att * f.p0_att);
  d.segment<3>(fusion::kGyroBias).setConstant(std::pow(sc.imu.gyro_bias_sigma, 2));
  d.segment<3>(fusion::kAccelBias).setConstant(std::pow(sc.imu.accel_bias_sigma, 2));
  // Keep P0 invertible for NEES even with an ideal sensor grade.
  d = d.cwiseMax(1e-18);
  return d.asDiagonal();
}

double position_sigma(const FilterState& fs) {
  const Mat3 pp = fs.P.block<3, 3>(fusion::kPos, fusion::kPos);
  Eigen::SelfAdjointEigenSolver<Mat3> es(0.5 * (pp + pp.transpose()), Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

double odo_speed_at(const std::vector<synth::OdoSample>& odo, double t) {
  auto it = std::upper_bound(odo.begin(), odo.end(), t + 1e-9,
                             [](double v, const synth::OdoSample& s) { return v < s.t; });
  if (it == odo.begin()) return odo.front().speed;
  return std::prev(it)->speed;
}

// Re-anchors the position on mutually consistent LoS fixes after the gates
// have refused them for too long, e.g. after a long unaided outage.
bool try_reset(FilterState& fs, const std::vector<fixes::Fix>& refused, double agreement,
               const Mat3& r_floor) {
  if (refused.size() < 2) return false;
  Vec3 mean = Vec3::Zero();
  Mat3 cov = Mat3::Zero();
  for (const auto& f : refused) {
    mean += f.p;
    cov += f.cov;
  }
  const double n = static_cast<double>(refused.size());
  mean /= n;
  cov /= n;
  for (const auto& f : refused) {
    if ((f.p - mean).norm() > agreement) return false;
  }
  fs.x.segment<3>(fusion::kPos) = mean;
  fs.P.block<3, fusion::kStateDim>(fusion::kPos, 0).setZero();
  fs.P.block<fusion::kStateDim, 3>(0, fusion::kPos).setZero();
  fs.P.block<3, 3>(fusion::kPos, fusion::kPos) = cov + r_floor + Mat3::Identity() * agreement * agreement;
  return true;
}

}  // namespace

fusion::UkfParams ukf_params(const Scenario& sc) {
  fusion::UkfParams p;
  p.alpha = sc.filter.alpha;
  p.beta = sc.filter.beta;
  p.kappa = sc.filter.kappa;
  p.Q = fusion::process_noise_for(sc.imu, sc.rates.imu_hz, sc.filter.bias_walk);
  p.R_los = sc.filter.r_floor * Mat3::Identity();
  p.R_sbr = sc.filter.r_floor * Mat3::Identity();
  p.nis_gate = sc.filter.nis_gate;
  p.validate();
  return p;
}

void Scenario::validate() const {
  if (truth.size() < 3) throw ConfigError("trajectory needs at least 3 samples");
  if (!(rates.imu_hz > 0.0 && rates.obs_hz > 0.0 && rates.odo_hz > 0.0)) {
    throw ConfigError("rates must be positive");
  }
  if (rates.imu_hz * ins::kMaxStep < 1.0) throw ConfigError("IMU rate must be at least 10 Hz");
  observation_stride(rates);
  if (std::abs((truth[1].t - truth[0].t) - 1.0 / rates.imu_hz) > 1e-9) {
    throw ConfigError("trajectory grid does not match the IMU rate");
  }
  std::set<std::string> ids;
  for (const auto& bs : world.base_stations) {
    if (!bs.p.allFinite()) throw ConfigError("base station '" + bs.id + "' has non-finite position");
    if (!ids.insert(bs.id).second) throw ConfigError("duplicate base station id '" + bs.id + "'");
  }
  if (world.base_stations.empty()) throw ConfigError("scenario has no base stations");
  if (!(noise.var_range >= 0.0) || !(noise.var_angle >= 0.0)) {
    throw ConfigError("noise variances must be non-negative");
  }
  auto check_windows = [](const std::vector<synth::OutageWindow>& ws) {
    for (const auto& w : ws) {
      if (!(w.t_end > w.t_start)) throw ConfigError("outage window needs t_end > t_start");
    }
  };
  check_windows(outages);
  check_windows(noise_sweep.outages);
  for (const auto& w : outage_sweep.windows) check_windows({w.window});
  for (double v : noise_sweep.range_variances) {
    if (!(v >= 0.0)) throw ConfigError("noise sweep variances must be non-negative");
  }
  for (double v : noise_sweep.angle_variances) {
    if (!(v >= 0.0)) throw ConfigError("noise sweep variances must be non-negative");
  }
  if (outage_sweep.seeds < 1 || noise_sweep.seeds < 1 || drift_seeds < 1) {
    throw ConfigError("seed counts must be positive");
  }
  if (!(filter.p0_pos > 0.0 && filter.p0_vel > 0.0 && filter.p0_att > 0.0)) {
    throw ConfigError("initial standard deviations must be positive");
  }
  if (!(filter.r_floor >= 0.0) || !(filter.bias_walk >= 0.0) || filter.reset_after < 0) {
    throw ConfigError("filter tuning values must be non-negative");
  }
  if (observations.max_bounces < 0 || observations.max_bounces > 2) {
    throw ConfigError("max_bounces must be 0, 1 or 2");
  }
  path_loss.validate();
  gates.validate();
  ukf_params(*this);
}

const scene::BaseStation& Scenario::base_station(const std::string& id) const {
  for (const auto& bs : world.base_stations) {
    if (bs.id == id) return bs;
  }
  throw ConfigError("unknown base station id '" + id + "'");
}

ObservationCache synthesize_observations(const Scenario& sc) {
  sc.validate();
  const std::size_t stride = observation_stride(sc.rates);
  ObservationCache cache;
  if (!sc.recorded.empty()) {
    cache.recorded = true;
    const double t0 = sc.truth.front().t;
    for (const synth::Epoch& e : sc.recorded) {
      const double pos = (e.t - t0) * sc.rates.imu_hz;
      const double k = std::round(pos);
      if (std::abs(pos - k) > 1e-6 || k < 0.0 || k >= static_cast<double>(sc.truth.size())) {
        throw ConfigError("recorded epoch off the trajectory grid");
      }
      if (!cache.truth_index.empty() && static_cast<std::size_t>(k) <= cache.truth_index.back()) {
        throw ConfigError("recorded epochs must be strictly increasing in time");
      }
      cache.truth_index.push_back(static_cast<std::size_t>(k));
      cache.epochs.push_back(e);
    }
    return cache;
  }
  for (std::size_t k = 0; k < sc.truth.size(); k += stride) {
    cache.truth_index.push_back(k);
    cache.epochs.push_back(
        synth::synth_epoch(sc.world, sc.truth[k], sc.path_loss, sc.observations));
  }
  return cache;
}

ins::NavState truth_state(const scene::Pose& pose, const synth::ImuErrors& errors) {
  ins::NavState s = ins::state_from_pose(pose);
  s.b_g = errors.gyro_bias;
  s.b_a = errors.accel_bias;
  return s;
}

synth::ImuErrors imu_errors_for(const Scenario& sc, std::uint64_t seed) {
  synth::Rng rng = synth::make_stream(seed, kImuErrorStream);
  return sc.imu.draw(rng);
}

std::vector<TimedPoint> RunReport::estimates() const {
  std::vector<TimedPoint> out;
  out.reserve(epochs.size());
  for (const auto& e : epochs) out.push_back({e.t, e.p_est});
  return out;
}

std::vector<double> RunReport::errors() const {
  std::vector<double> out;
  out.reserve(epochs.size());
  for (const auto& e : epochs) out.push_back(e.e3d);
  return out;
}

RunReport run_single(const Scenario& sc, const ObservationCache& cache, const RunOptions& opt) {
  const auto& truth = sc.truth;
  const double dt = 1.0 / sc.rates.imu_hz;
  const double epoch_dt = 1.0 / sc.rates.obs_hz;
  const fusion::UkfParams params = ukf_params(sc);
  const auto& gates = sc.gates;

  const synth::ImuErrors errors = imu_errors_for(sc, opt.seed);
  synth::Rng imu_rng = synth::make_stream(opt.seed, kImuNoiseStream);
  const auto imu = synth::synth_imu(truth, errors, sc.rates.imu_hz, imu_rng);
  synth::Rng odo_rng = synth::make_stream(opt.seed, kOdoStream);
  const auto odo = synth::synth_odo(truth, sc.rates.odo_hz, sc.odo, odo_rng);

  const StateMat p0 = initial_covariance(sc);
  ins::NavState nav0 = ins::state_from_pose(truth.front());
  if (opt.perturb_initial) {
    synth::Rng rng = synth::make_stream(opt.seed, kInitStream);
    std::normal_distribution<double> n01(0.0, 1.0);
    StateVec e;
    for (int i = 0; i < fusion::kStateDim; ++i) e(i) = std::sqrt(p0(i, i)) * n01(rng);
    // The truth biases are already a draw from the same prior.
    nav0.p -= e.segment<3>(fusion::kPos);
    nav0.v -= e.segment<3>(fusion::kVel);
    nav0.q_bn = nav0.q_bn * quat_exp(-e.segment<3>(fusion::kAtt));
  }
  FilterState fs = fusion::make_state(nav0, p0, truth.front().t);

  synth::NoiseCfg noise = opt.noise;
  noise.seed = opt.seed;

  RunReport rep;
  rep.seed = opt.seed;
  rep.with_sbr = opt.with_sbr;
  auto track_psd = [&](const FilterState& s) {
    rep.min_eigenvalue = std::min(rep.min_eigenvalue, fusion::min_eigenvalue(s.P));
  };
  track_psd(fs);

  std::size_t prev_k = cache.truth_index.empty() ? 0 : cache.truth_index.front();
  Vec3 prev_post = fs.x.segment<3>(fusion::kPos);
  double prev_sigma = position_sigma(fs);
  int refused_streak = 0;
  std::size_t last_k = prev_k;

  for (std::size_t ei = 0; ei < cache.epochs.size(); ++ei) {
    const std::size_t k = cache.truth_index[ei];
    const double t = truth[k].t;
    if (t > opt.t_end) break;
    if (k > prev_k) {
      fs = fusion::predict(fs, std::span(imu).subspan(prev_k, k - prev_k), dt, params);
      track_psd(fs);
    }
    prev_k = k;
    last_k = k;

    synth::Epoch epoch = cache.recorded ? cache.epochs[ei]
                                        : synth::apply_noise(cache.epochs[ei], noise, ei);
    epoch = synth::apply_outages(std::move(epoch), opt.outages);

    EpochRecord rec;
    rec.t = t;
    rec.outage = synth::in_outage(t, opt.outages);
    identify::GateCounts& gc = rec.gates;
    const double odo_dist = odo_speed_at(odo, t) * epoch_dt;
    const double motion_slack = 3.0 * prev_sigma;
    auto motion_ok = [&](const Vec3& candidate) {
      identify::GateConfig inflated = gates;
      inflated.motion_margin += motion_slack;
      const bool ok = identify::motion_gate(candidate, prev_post, odo_dist, epoch_dt, inflated);
      (ok ? gc.motion_admitted : gc.motion_rejected) += 1;
      return ok;
    };

    // LoS fixes.
    std::vector<fixes::Fix> refused;
    for (const synth::LosObs& obs : epoch.los) {
      const scene::BaseStation& bs = sc.base_station(obs.bs_id);
      if (!identify::classify_los(obs, sc.path_loss, gates)) {
        ++gc.los_rejected;
        continue;
      }
      ++gc.los_admitted;
      fixes::Fix fix = fixes::los_fix(bs, obs, noise);
      if (!motion_ok(fix.p)) {
        refused.push_back(std::move(fix));
        continue;
      }
      const auto up = fusion::update_position(fs, fix, fix.cov + params.R_los, params);
      if (!up.applied) {
        ++gc.innovation_rejected;
        refused.push_back(std::move(fix));
        continue;
      }
      fs = up.state;
      track_psd(fs);
      ++rec.los_used;
    }
    if (rec.los_used == 0 && !refused.empty()) {
      ++refused_streak;
    } else {
      refused_streak = 0;
    }
    if (sc.filter.reset_after > 0 && refused_streak >= sc.filter.reset_after) {
      if (try_reset(fs, refused, 2.0 * gates.residual_threshold, params.R_los)) {
        ++rep.filter_resets;
        track_psd(fs);
      }
      refused_streak = 0;
    }

    // Multipath fix from the single-bounce candidates.
    if (opt.with_sbr && !epoch.sbr.empty()) {
      const Vec3 ref = fs.x.segment<3>(fusion::kPos);
      const double limit = gates.residual_threshold + 3.0 * position_sigma(fs);
      std::vector<fixes::SbrMeasurement> cands;
      for (const synth::SbrObs& obs : epoch.sbr) {
        fixes::SbrMeasurement m{sc.base_station(obs.bs_id), obs};
        if (!identify::single_bounce_rss(obs, sc.path_loss, gates) ||
            !identify::elevation_consistent(obs, gates) ||
            fixes::path_residual(m, ref).distance > limit) {
          ++gc.oori_rejected;
          continue;
        }
        ++gc.oori_admitted;
        cands.push_back(std::move(m));
      }
      while (cands.size() >= 2) {
        const fixes::SbrSolution sol = fixes::sbr_fix(cands, noise);
        if (sol.status != fixes::SbrStatus::Ok) break;
        const auto& res = sol.fix->path_residuals;
        const auto worst = static_cast<std::size_t>(
            std::max_element(res.begin(), res.end()) - res.begin());
        if (!identify::oori_check(cands[worst].obs, res[worst], gates)) {
          cands.erase(cands.begin() + static_cast<std::ptrdiff_t>(worst));
          --gc.oori_admitted;
          ++gc.oori_rejected;
          continue;
        }
        const fixes::Fix& fix = *sol.fix;
        if (motion_ok(fix.p)) {
          const auto up = fusion::update_position(fs, fix, fix.cov + params.R_sbr, params);
          if (up.applied) {
            fs = up.state;
            track_psd(fs);
            rec.sbr_used = fix.n_paths;
          } else {
            ++gc.innovation_rejected;
          }
        }
        break;
      }
    }

    rec.p_est = fs.x.segment<3>(fusion::kPos);
    rec.p_true = truth[k].p;
    rec.e3d = (rec.p_est - rec.p_true).norm();
    if (opt.record_states) {
      rec.x = fs.x;
      rec.rpy = rpy_from_quat(fs.q_bn);
      rec.p_diag = fs.P.diagonal();
    }
    rep.gates += gc;
    if (opt.observer) opt.observer(fs, rec);
    rep.epochs.push_back(std::move(rec));
    prev_post = fs.x.segment<3>(fusion::kPos);
    prev_sigma = position_sigma(fs);
  }

  if (rep.epochs.empty()) throw ConfigError("run contains no observation epochs");
  const auto est = rep.estimates();
  rep.rmse_3d = rmse_3d(est, truth);
  try {
    rep.max_error_pct = max_error_pct(est, truth, est.front().t, est.back().t);
  } catch (const std::domain_error&) {
    rep.max_error_pct = std::numeric_limits<double>::quiet_NaN();
  }
  rep.cdf = error_cdf(rep.errors());
  rep.final_nees = fusion::nees(fs, truth_state(truth[last_k], errors));
  return rep;
}

std::vector<synth::Epoch> run_observations(const ObservationCache& cache,
                                           const std::vector<scene::Pose>& truth,
                                           const RunOptions& opt) {
  synth::NoiseCfg noise = opt.noise;
  noise.seed = opt.seed;
  std::vector<synth::Epoch> out;
  for (std::size_t ei = 0; ei < cache.epochs.size(); ++ei) {
    if (truth[cache.truth_index[ei]].t > opt.t_end) break;
    synth::Epoch epoch = cache.recorded ? cache.epochs[ei]
                                        : synth::apply_noise(cache.epochs[ei], noise, ei);
    out.push_back(synth::apply_outages(std::move(epoch), opt.outages));
  }
  return out;
}

OutageSweepResult run_outage_sweep(const Scenario& sc, const ObservationCache& cache,
                                   std::uint64_t base_seed) {
  OutageSweepResult out;
  RunOptions opt;
  opt.noise = sc.noise;
  for (const auto& w : sc.outage_sweep.windows) opt.outages.push_back(w.window);
  for (const auto& w : sc.outage_sweep.windows) {
    OutageRow row;
    row.id = w.id;
    row.duration = w.window.t_end - w.window.t_start;
    row.distance = scene::arc_length(sc.truth, w.window.t_start, w.window.t_end);
    row.mean_speed = row.distance / row.duration;
    out.rows.push_back(row);
  }

  for (int i = 0; i < sc.outage_sweep.seeds; ++i) {
    opt.seed = base_seed + static_cast<std::uint64_t>(i);
    out.seeds.push_back(opt.seed);
    opt.with_sbr = false;
    RunReport without = run_single(sc, cache, opt);
    opt.with_sbr = true;
    RunReport with = run_single(sc, cache, opt);
    const auto est_without = without.estimates();
    const auto est_with = with.estimates();
    for (std::size_t r = 0; r < out.rows.size(); ++r) {
      const auto& win = sc.outage_sweep.windows[r].window;
      OutageRow& row = out.rows[r];
      row.rms_without.push_back(rmse_3d(est_without, sc.truth, win.t_start, win.t_end));
      row.pct_without.push_back(max_error_pct(est_without, sc.truth, win.t_start, win.t_end));
      row.rms_with.push_back(rmse_3d(est_with, sc.truth, win.t_start, win.t_end));
      row.pct_with.push_back(max_error_pct(est_with, sc.truth, win.t_start, win.t_end));
    }
    if (i == 0) {
      without.run = "outage_without_sbr";
      with.run = "outage_with_sbr";
      out.first_without = std::move(without);
      out.first_with = std::move(with);
    }
  }
  return out;
}

NoiseSweepResult run_noise_sweep(const Scenario& sc, const ObservationCache& cache,
                                 std::uint64_t base_seed) {
  const auto& spec = sc.noise_sweep;
  NoiseSweepResult out;
  for (double v : spec.range_variances) out.levels.push_back({"range", v, {}, {}, {}, {}});
  for (double v : spec.angle_variances) out.levels.push_back({"angle", v, {}, {}, {}, {}});

  RunOptions opt;
  opt.outages = spec.outages;
  if (spec.duration > 0.0) opt.t_end = sc.truth.front().t + spec.duration;
  for (int i = 0; i < spec.seeds; ++i) {
    opt.seed = base_seed + static_cast<std::uint64_t>(i);
    out.seeds.push_back(opt.seed);
    for (NoiseLevel& level : out.levels) {
      opt.noise = sc.noise;
      (level.domain == "range" ? opt.noise.var_range : opt.noise.var_angle) = level.variance;
      for (bool with_sbr : {false, true}) {
        opt.with_sbr = with_sbr;
        const std::vector<double> errs = run_single(sc, cache, opt).errors();
        (with_sbr ? level.median_with : level.median_without).push_back(median(errs));
        auto& pooled = with_sbr ? level.pooled_with : level.pooled_without;
        pooled.insert(pooled.end(), errs.begin(), errs.end());
      }
    }
  }
  return out;
}

std::vector<DriftRow> run_drift_profile(const Scenario& sc, std::uint64_t base_seed) {
  sc.validate();
  const std::size_t stride = observation_stride(sc.rates);
  std::vector<std::vector<double>> columns;
  for (int i = 0; i < sc.drift_seeds; ++i) {
    const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(i);
    const auto curve = ins::drift_profile(sc.truth, imu_errors_for(sc, seed), sc.rates.imu_hz, seed);
    std::size_t row = 0;
    for (std::size_t k = 0; k < curve.size(); k += stride, ++row) {
      if (columns.size() <= row) columns.emplace_back();
      columns[row].push_back(curve[k].error);
    }
  }
  std::vector<DriftRow> out;
  for (std::size_t row = 0; row < columns.size(); ++row) {
    const double t = sc.truth[row * stride].t;
    out.push_back({t, median(columns[row]), quantile(columns[row], 0.25),
                   quantile(columns[row], 0.75)});
  }
  return out;
}

}  // namespace mpnav::eval
