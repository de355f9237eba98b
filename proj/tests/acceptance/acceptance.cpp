// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include "mpnav/io.hpp"
#include "mpnav/pipeline.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#ifndef MPNAV_SCENARIO_DIR
#error "MPNAV_SCENARIO_DIR must point at the scenarios directory"
#endif

using namespace mpnav;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarioDir = MPNAV_SCENARIO_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string format(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double fraction(long hits, long total) {
  return total > 0 ? static_cast<double>(hits) / static_cast<double>(total) : 0.0;
}

using Uniform = std::uniform_real_distribution<double>;

// Random vertical wall whose plane lies at `dist` from `centre` with a random
// orientation; long and tall so that specular points usually land on it.
scene::Wall wall_facing(const Vec3& centre, double dist, double azimuth, double length,
                        double height, const std::string& id) {
  const Vec2 n(std::cos(azimuth), std::sin(azimuth));
  const Vec2 t(-n.y(), n.x());
  const Vec2 foot = centre.head<2>() + dist * n;
  return scene::Wall(id, foot - 0.5 * length * t, foot + 0.5 * length * t, 0.0, height);
}

bool same_side(const scene::Wall& w, const Vec3& a, const Vec3& b) {
  return w.signed_distance(a) * w.signed_distance(b) > 0.0;
}

// ---------------------------------------------------------------------------

Outcome geometry_oracles() {
  synth::Rng rng = synth::make_stream(101, 0);
  Uniform pos(-300, 300), hgt(0, 40);
  double mirror = 0, specular = 0, length = 0, vertical = 0, units = 0, sums = 0;
  long scenes = 0, attempts = 0, asymmetric = 0;
  while (scenes < 1000) {
    ++attempts;
    const scene::Wall w("w", Vec2(pos(rng), pos(rng)), Vec2(pos(rng), pos(rng)), 0.0, 10 + hgt(rng));
    const scene::BaseStation bs{"bs", {pos(rng), pos(rng), hgt(rng)}};
    const Vec3 ue{pos(rng), pos(rng), hgt(rng) / 8};
    const Vec3 p{pos(rng), pos(rng), hgt(rng)};
    mirror = std::max(mirror, (scene::mirror_point(scene::mirror_point(p, w), w) - p).norm() /
                                  std::max(1.0, p.norm()));
    const std::vector<scene::Wall> walls{w};
    if (scene::segment_clear(bs.p, ue, walls) != scene::segment_clear(ue, bs.p, walls)) ++asymmetric;

    const auto path = scene::specular_path(bs, ue, w);
    if (!path) continue;
    ++scenes;
    const Vec3 out = (ue - path->q) / path->d2;
    const Vec3 n = w.normal();
    specular = std::max(specular, (out - (path->u_d - 2 * path->u_d.dot(n) * n)).norm());
    length = std::max(length, std::abs(path->length - (scene::mirror_point(bs.p, w) - ue).norm()));
    vertical = std::max(vertical, std::abs(out.z() - path->u_d.z()));
    units = std::max({units, std::abs(path->u_d.norm() - 1), std::abs(path->u_a.norm() - 1)});
    sums = std::max(sums, std::abs(path->length - path->d1 - path->d2) / path->length);
  }
  const bool ok = mirror <= 1e-12 && specular <= 1e-9 && length <= 1e-9 && vertical <= 1e-9 &&
                  units <= 1e-12 && sums <= 1e-9 && asymmetric == 0;
  return {ok, format("%ld scenes (%ld drawn): involution %.1e, specular %.1e, L %.1e, "
                     "z %.1e, |u|-1 %.1e, asymmetric LoS %ld",
                     scenes, attempts, mirror, specular, length, vertical, units, asymmetric)};
}

// ---------------------------------------------------------------------------

struct TwoPathScene {
  Vec3 ue;
  std::vector<scene::Wall> walls;
  std::vector<fixes::SbrMeasurement> paths;
};

std::optional<fixes::SbrMeasurement> observe(const scene::BaseStation& bs, const Vec3& ue,
                                             const scene::Wall& w) {
  if (!same_side(w, bs.p, ue)) return std::nullopt;
  const auto path = scene::specular_path(bs, ue, w);
  if (!path) return std::nullopt;
  scene::Pose pose;
  pose.p = ue;
  return fixes::SbrMeasurement{bs, synth::synth_sbr(*path, pose, synth::PathLossModel{})};
}

scene::BaseStation random_bs(synth::Rng& rng, const Vec3& ue, const std::string& id) {
  Uniform ang(-kPi, kPi), bs_r(30, 300), bs_h(10, 30);
  const double th = ang(rng), r = bs_r(rng);
  return {id, Vec3(ue.x() + r * std::cos(th), ue.y() + r * std::sin(th), bs_h(rng))};
}

// Two single-bounce paths to a random UE off two non-parallel walls.
TwoPathScene two_path_scene(synth::Rng& rng) {
  Uniform pos(-100, 100), dist(10, 80), ang(-kPi, kPi), sep(deg2rad(20), deg2rad(160));
  while (true) {
    TwoPathScene s;
    s.ue = Vec3(pos(rng), pos(rng), 1.5);
    const double a1 = ang(rng);
    const double a2 = a1 + sep(rng) * (ang(rng) > 0 ? 1 : -1);
    s.walls = {wall_facing(s.ue, dist(rng), a1, 400, 40, "w1"),
               wall_facing(s.ue, dist(rng), a2, 400, 40, "w2")};
    for (const scene::Wall& w : s.walls) {
      const auto m = observe(random_bs(rng, s.ue, "bs_" + w.id()), s.ue, w);
      if (!m) break;
      s.paths.push_back(*m);
    }
    if (s.paths.size() == 2) return s;
  }
}

Outcome solver_exactness() {
  synth::Rng rng = synth::make_stream(202, 0);
  Uniform pos(-300, 300), hgt(0, 40);
  double los_err = 0, sbr_err = 0;
  long sbr_failed = 0, degenerate_fixes = 0, degenerate = 0;
  for (int i = 0; i < 1000; ++i) {
    const scene::BaseStation bs{"bs", {pos(rng), pos(rng), hgt(rng)}};
    scene::Pose pose;
    pose.p = Vec3(pos(rng), pos(rng), hgt(rng) / 8);
    const auto obs = synth::synth_los(bs, pose, synth::PathLossModel{});
    los_err = std::max(los_err, (fixes::los_fix(bs, obs, {}).p - pose.p).norm());

    const TwoPathScene s = two_path_scene(rng);
    const auto sol = fixes::sbr_fix(s.paths, {});
    if (!sol.fix) {
      ++sbr_failed;
    } else {
      sbr_err = std::max(sbr_err, (sol.fix->p - s.ue).norm());
    }

    // Degenerate K = 2: the same wall from the same BS, and the same wall
    // from a second BS.
    std::vector<std::vector<fixes::SbrMeasurement>> sets{{s.paths[0], s.paths[0]}};
    for (int tries = 0; tries < 100; ++tries) {
      if (const auto m = observe(random_bs(rng, s.ue, "other"), s.ue, s.walls[0])) {
        sets.push_back({s.paths[0], *m});
        break;
      }
    }
    for (const auto& set : sets) {
      ++degenerate;
      if (fixes::sbr_fix(set, {}).fix) ++degenerate_fixes;
    }
  }
  const bool ok = los_err <= 1e-9 && sbr_err <= 1e-6 && sbr_failed == 0 && degenerate_fixes == 0;
  return {ok, format("LoS max err %.1e m, two-path max err %.1e m, %ld/1000 unsolved, "
                     "%ld/%ld degenerate sets produced a fix",
                     los_err, sbr_err, sbr_failed, degenerate_fixes, degenerate)};
}

// ---------------------------------------------------------------------------

Outcome oori_accuracy() {
  synth::Rng rng = synth::make_stream(303, 0);
  Uniform pos(-100, 100), dist(10, 80), ang(-kPi, kPi);
  const synth::NoiseCfg noise{0.5, 0.01, 0};
  const synth::PathLossModel plm;
  const identify::GateConfig cfg;
  long correct = 0, geometric = 0, missed_single = 0, leaked_double = 0;
  for (int bounces = 1; bounces <= 2; ++bounces) {
    int n = 0;
    while (n < 1000) {
      const Vec3 ue(pos(rng), pos(rng), 1.5);
      const scene::BaseStation bs = random_bs(rng, ue, "bs");
      std::optional<synth::SbrObs> obs;
      if (bounces == 1) {
        if (const auto m = observe(bs, ue, wall_facing(ue, dist(rng), ang(rng), 400, 40, "w"))) {
          obs = m->obs;
        }
      } else {
        const scene::Wall w1 = wall_facing(ue, dist(rng), ang(rng), 400, 40, "w1");
        const scene::Wall w2 = wall_facing(ue, dist(rng), ang(rng), 400, 40, "w2");
        if (const auto p = scene::double_bounce_path(bs, ue, w1, w2)) {
          obs = synth::synth_reflected(*p, 0.0, plm);
        }
      }
      if (!obs) continue;
      ++n;
      const fixes::SbrMeasurement m{bs, synth::apply_noise(*obs, noise, rng)};

      // Reference position: a noisy LoS fix from another BS.
      const scene::BaseStation ref_bs = random_bs(rng, ue, "ref");
      scene::Pose pose;
      pose.p = ue;
      const auto los = synth::apply_noise(synth::synth_los(ref_bs, pose, plm), noise, rng);
      const Vec3 ref = fixes::los_fix(ref_bs, los, noise).p;

      const double residual = fixes::path_residual(m, ref).distance;
      const bool truth = m.obs.truth_bounces == 1;
      const bool admit = identify::oori_admit(m.obs, residual, plm, cfg);
      correct += admit == truth;
      geometric += identify::oori_check(m.obs, residual, cfg) == truth;
      missed_single += truth && !admit;
      leaked_double += !truth && admit;
    }
  }
  const double acc = fraction(correct, 2000);
  return {acc >= 0.99,
          format("accuracy %.2f%% (>= 99%%): %ld/1000 single rejected, %ld/1000 double "
                 "admitted; geometric rules alone %.2f%%",
                 100 * acc, missed_single, leaked_double, 100 * fraction(geometric, 2000))};
}

// ---------------------------------------------------------------------------

struct LoopScenario {
  io::RunConfig rc;
  eval::Scenario sc;
  eval::ObservationCache cache;
};

const LoopScenario& loop() {
  static const LoopScenario s = [] {
    const auto doc = io::read_json_file(kScenarioDir / "loop_8bs.json");
    LoopScenario l{io::run_config_from_json(doc), io::scenario_from_json(doc, kScenarioDir), {}};
    l.cache = eval::synthesize_observations(l.sc);
    return l;
  }();
  return s;
}

// Renders report files into a scratch directory and returns their bytes.
std::map<std::string, std::string> render(
    const std::map<std::string, std::function<void(const fs::path&)>>& writers) {
  const fs::path dir = fs::temp_directory_path() /
                       ("mpnav_acceptance_" + std::to_string(std::chrono::steady_clock::now()
                                                                 .time_since_epoch()
                                                                 .count()));
  fs::create_directories(dir);
  std::map<std::string, std::string> out;
  for (const auto& [name, write] : writers) {
    write(dir / name);
    std::ifstream in(dir / name, std::ios::binary);
    out[name] = std::string(std::istreambuf_iterator<char>(in), {});
  }
  fs::remove_all(dir);
  return out;
}

std::map<std::string, std::string> outage_csvs(const eval::OutageSweepResult& r) {
  return render({{"summary.csv", [&](const fs::path& p) { io::write_outage_summary(p, r); }},
                 {"outage_runs.csv", [&](const fs::path& p) { io::write_outage_runs(p, r); }},
                 {"errors_without.csv", [&](const fs::path& p) { io::write_errors_csv(p, r.first_without); }},
                 {"errors_with.csv", [&](const fs::path& p) { io::write_errors_csv(p, r.first_with); }},
                 {"cdf_with.csv", [&](const fs::path& p) { io::write_cdf_csv(p, r.first_with.cdf); }},
                 {"gates_with.csv", [&](const fs::path& p) { io::write_gates_csv(p, r.first_with); }}});
}

std::map<std::string, std::string> noise_csvs(const eval::NoiseSweepResult& r) {
  return render({{"summary.csv", [&](const fs::path& p) { io::write_noise_summary(p, r); }},
                 {"noise_runs.csv", [&](const fs::path& p) { io::write_noise_runs(p, r); }}});
}

std::optional<std::map<std::string, std::string>> first_outage_csvs, first_noise_csvs;

Outcome outage_trend() {
  const LoopScenario& l = loop();
  const eval::OutageSweepResult r = eval::run_outage_sweep(l.sc, l.cache, l.rc.seed);
  first_outage_csvs = outage_csvs(r);
  const long seeds = static_cast<long>(r.seeds.size());

  double worst_improved = 1.0, worst_submetre = 1.0, max_with = 0.0;
  const eval::OutageRow* shortest = &r.rows.front();
  const eval::OutageRow* longest = nullptr;
  std::string per_row;
  for (const eval::OutageRow& row : r.rows) {
    long improved = 0, submetre = 0;
    for (long i = 0; i < seeds; ++i) {
      improved += row.rms_with[i] < row.rms_without[i];
      submetre += row.rms_with[i] < 1.0;
      max_with = std::max(max_with, row.rms_with[i]);
    }
    worst_improved = std::min(worst_improved, fraction(improved, seeds));
    if (row.duration <= 400.0) {
      worst_submetre = std::min(worst_submetre, fraction(submetre, seeds));
      if (!longest || row.duration > longest->duration) longest = &row;
    }
    if (row.duration < shortest->duration) shortest = &row;
    per_row += format(" #%d %.0fs %.2f/%.2f m;", row.id, row.duration,
                      eval::median(row.rms_without), eval::median(row.rms_with));
  }
  long grows = 0;
  for (long i = 0; i < seeds; ++i) grows += longest->rms_without[i] > shortest->rms_without[i];
  const double grow_frac = fraction(grows, seeds);
  const bool ok = seeds == 20 && worst_improved >= 0.95 && grow_frac >= 0.95 && worst_submetre >= 0.95;
  return {ok, format("%ld seeds: with<without %.0f%% (worst outage), without %.0fs > %.0fs %.0f%%, "
                     "with-SBR < 1 m %.0f%% (max %.2f m); median rms without/with:%s",
                     seeds, 100 * worst_improved, longest->duration, shortest->duration,
                     100 * grow_frac, 100 * worst_submetre, max_with, per_row.c_str())};
}

// ---------------------------------------------------------------------------

Outcome noise_trend() {
  const LoopScenario& l = loop();
  const eval::NoiseSweepResult r = eval::run_noise_sweep(l.sc, l.cache, l.rc.seed);
  first_noise_csvs = noise_csvs(r);
  const long seeds = static_cast<long>(r.seeds.size());

  double worst_monotone = 1.0, worst_dominance = 1.0;
  std::string medians;
  for (const std::string domain : {"range", "angle"}) {
    std::vector<const eval::NoiseLevel*> levels;
    for (const auto& lv : r.levels) {
      if (lv.domain == domain) levels.push_back(&lv);
    }
    std::sort(levels.begin(), levels.end(),
              [](const auto* a, const auto* b) { return a->variance < b->variance; });
    for (const bool with : {false, true}) {
      long monotone = 0;
      for (long i = 0; i < seeds; ++i) {
        bool ok = true;
        for (std::size_t k = 1; k < levels.size(); ++k) {
          const auto& prev = with ? levels[k - 1]->median_with : levels[k - 1]->median_without;
          const auto& cur = with ? levels[k]->median_with : levels[k]->median_without;
          ok = ok && prev[i] <= cur[i];
        }
        monotone += ok;
      }
      worst_monotone = std::min(worst_monotone, fraction(monotone, seeds));
    }
    for (const auto* lv : levels) {
      long dominated = 0;
      for (long i = 0; i < seeds; ++i) dominated += lv->median_with[i] <= lv->median_without[i];
      worst_dominance = std::min(worst_dominance, fraction(dominated, seeds));
      medians += format(" %s %g: %.3f/%.3f m;", domain.c_str(), lv->variance,
                        eval::median(lv->median_without), eval::median(lv->median_with));
    }
  }
  const bool ok = seeds == 20 && r.levels.size() == 6 && worst_monotone >= 0.95 &&
                  worst_dominance >= 0.95;
  return {ok, format("%ld seeds: monotone %.0f%% (worst arm/domain), with<=without %.0f%% "
                     "(worst level); median error without/with:%s",
                     seeds, 100 * worst_monotone, 100 * worst_dominance, medians.c_str())};
}

// ---------------------------------------------------------------------------

Outcome filter_health() {
  const LoopScenario& l = loop();
  const int runs = 200;
  const double dof = 15.0 * runs;
  const boost::math::chi_squared chi(dof);
  const double lo = boost::math::quantile(chi, 0.025) / runs;
  const double hi = boost::math::quantile(chi, 0.975) / runs;
  const fusion::UkfParams params = eval::ukf_params(l.sc);
  const Mat3 spoof_r = params.R_los + l.sc.noise.var_range * Mat3::Identity();

  bool ok = true;
  std::string detail;
  double min_eig = std::numeric_limits<double>::infinity();
  long spoofs = 0, gated = 0;
  for (const bool with_sbr : {false, true}) {
    double sum = 0.0;
    for (int i = 0; i < runs; ++i) {
      eval::RunOptions opt;
      opt.with_sbr = with_sbr;
      opt.seed = 1000 + static_cast<std::uint64_t>(i);
      opt.noise = l.sc.noise;
      opt.perturb_initial = true;
      opt.t_end = 60.0;
      synth::Rng rng = synth::make_stream(opt.seed, 77);
      std::normal_distribution<double> g;
      opt.observer = [&](const fusion::FilterState& fs, const eval::EpochRecord&) {
        const Vec3 dir = Vec3(g(rng), g(rng), g(rng)).normalized();
        fixes::Fix spoof;
        spoof.p = fs.x.segment<3>(fusion::kPos) + 100.0 * dir;
        ++spoofs;
        gated += !fusion::update_position(fs, spoof, spoof_r, params).applied;
      };
      const eval::RunReport rep = eval::run_single(l.sc, l.cache, opt);
      sum += rep.final_nees;
      min_eig = std::min(min_eig, rep.min_eigenvalue);
    }
    const double mean = sum / runs;
    ok = ok && mean >= lo && mean <= hi;
    detail += format("mean NEES %s %.2f; ", with_sbr ? "with SBR" : "LoS only", mean);
  }
  ok = ok && min_eig >= -1e-9 && gated == spoofs;
  return {ok, format("%d runs x 60 s, band [%.2f, %.2f]: %smin eig(P) %.1e, "
                     "100 m spoofs gated %ld/%ld",
                     runs, lo, hi, detail.c_str(), min_eig, gated, spoofs)};
}

// ---------------------------------------------------------------------------

Outcome ins_round_trip() {
  const LoopScenario& l = loop();
  const double hz = l.sc.rates.imu_hz;
  const auto n = static_cast<std::size_t>(std::lround(60.0 * hz)) + 1;
  const std::span<const scene::Pose> first_minute(l.sc.truth.data(), n);
  double worst = 0.0;
  for (const auto& d : ins::drift_profile(first_minute, synth::ImuErrors{}, hz, 1)) {
    worst = std::max(worst, d.error);
  }

  const auto curve = eval::run_drift_profile(l.sc, l.rc.seed);
  const auto again = eval::run_drift_profile(l.sc, l.rc.seed);
  bool reproducible = curve.size() == again.size();
  for (std::size_t i = 0; reproducible && i < curve.size(); ++i) {
    reproducible = curve[i].median == again[i].median;
  }
  auto at = [&](double t) {
    const auto it = std::lower_bound(curve.begin(), curve.end(), t - 1e-9,
                                     [](const eval::DriftRow& r, double v) { return r.t < v; });
    return it == curve.end() ? curve.back().median : it->median;
  };
  const std::vector<double> checkpoints{20, 40, 60, 200, 400};
  bool monotone = true;
  std::string values;
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    values += format(" %.0fs %.3g m", checkpoints[i], at(checkpoints[i]));
    if (i > 0) monotone = monotone && at(checkpoints[i]) > at(checkpoints[i - 1]);
  }
  long rises = 0;
  for (std::size_t i = 1; i < curve.size(); ++i) rises += curve[i].median >= curve[i - 1].median;
  const bool ok = worst < 0.01 && monotone && reproducible;
  return {ok, format("noiseless 60 s max error %.2e m (< 1 cm); biased median drift (%d seeds)"
                     "%s, increasing at checkpoints %s, non-decreasing on %.1f%% of steps, "
                     "reproducible %s",
                     worst, l.sc.drift_seeds, values.c_str(), monotone ? "yes" : "no",
                     100 * fraction(rises, static_cast<long>(curve.size()) - 1),
                     reproducible ? "yes" : "no")};
}

// ---------------------------------------------------------------------------

Outcome determinism() {
  const LoopScenario& l = loop();
  if (!first_outage_csvs) first_outage_csvs = outage_csvs(eval::run_outage_sweep(l.sc, l.cache, l.rc.seed));
  if (!first_noise_csvs) first_noise_csvs = noise_csvs(eval::run_noise_sweep(l.sc, l.cache, l.rc.seed));
  const auto outage = outage_csvs(eval::run_outage_sweep(l.sc, l.cache, l.rc.seed));
  const auto noise = noise_csvs(eval::run_noise_sweep(l.sc, l.cache, l.rc.seed));
  long files = 0, identical = 0, bytes = 0;
  for (const auto& [first, second] : {std::pair{&*first_outage_csvs, &outage},
                                      std::pair{&*first_noise_csvs, &noise}}) {
    for (const auto& [name, content] : *first) {
      ++files;
      bytes += static_cast<long>(content.size());
      const auto it = second->find(name);
      identical += it != second->end() && it->second == content && !content.empty();
    }
  }
  return {files > 0 && identical == files,
          format("outage and noise sweeps rerun with seed %llu: %ld/%ld CSVs byte-identical "
                 "(%ld bytes)",
                 static_cast<unsigned long long>(l.rc.seed), identical, files, bytes)};
}

}  // namespace

int main() {
  struct Criterion {
    std::string name;
    std::function<Outcome()> run;
    double time_limit;  // s, <= 0: none
  };
  const std::vector<Criterion> criteria{
      {"C1 geometry oracles", geometry_oracles, 5.0},
      {"C2 solver exactness", solver_exactness, 10.0},
      {"C3 OoRI accuracy", oori_accuracy, 0.0},
      {"C4 outage trend", outage_trend, 300.0},
      {"C5 noise-sweep trend", noise_trend, 300.0},
      {"C6 filter health", filter_health, 0.0},
      {"C7 INS round trip and drift", ins_round_trip, 0.0},
      {"C8 determinism", determinism, 0.0},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.time_limit <= 0 || secs < c.time_limit;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::cout << (pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail
              << format(" [%.1f s", secs)
              << (c.time_limit > 0 ? format(", limit %.0f s]", c.time_limit) : std::string("]"))
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
