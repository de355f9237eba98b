// mpnav: runs a scenario file in the mode it declares and writes CSV reports.

#include "mpnav/io.hpp"
#include "mpnav/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kGeometry = 3, kNumeric = 4 };

int fail(ExitCode code, const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"exit_code", static_cast<int>(code)}, {"message", message}}
                   .dump()
            << '\n';
  return code;
}

// Outputs are rendered in memory first and written only once the whole run
// succeeded.
using Outputs = std::map<std::string, std::function<void(const fs::path&)>>;

Outputs run_mode(const mpnav::io::RunConfig& rc, const mpnav::eval::Scenario& sc) {
  using namespace mpnav;
  const eval::ObservationCache cache = eval::synthesize_observations(sc);
  Outputs out;
  if (rc.mode == "single") {
    eval::RunOptions opt;
    opt.with_sbr = rc.with_sbr;
    opt.seed = rc.seed;
    opt.noise = sc.noise;
    opt.outages = sc.outages;
    opt.record_states = true;
    auto rep = std::make_shared<eval::RunReport>(eval::run_single(sc, cache, opt));
    rep->run = "single";
    auto obs = std::make_shared<std::vector<synth::Epoch>>(
        eval::run_observations(cache, sc.truth, opt));
    out["errors_single.csv"] = [rep](const fs::path& p) { io::write_errors_csv(p, *rep); };
    out["cdf_single.csv"] = [rep](const fs::path& p) { io::write_cdf_csv(p, rep->cdf); };
    out["gates_single.csv"] = [rep](const fs::path& p) { io::write_gates_csv(p, *rep); };
    out["state_single.csv"] = [rep](const fs::path& p) { io::write_state_csv(p, *rep); };
    out["summary.csv"] = [rep](const fs::path& p) { io::write_single_summary(p, *rep); };
    out["measurements_single.jsonl"] = [obs](const fs::path& p) {
      std::ostringstream os;
      io::write_measurement_log(os, *obs);
      io::write_text(p, os.str());
    };
  } else if (rc.mode == "outage-sweep") {
    if (sc.outage_sweep.windows.empty()) throw ConfigError("outage-sweep needs outage_sweep.windows");
    auto res = std::make_shared<eval::OutageSweepResult>(eval::run_outage_sweep(sc, cache, rc.seed));
    out["summary.csv"] = [res](const fs::path& p) { io::write_outage_summary(p, *res); };
    out["outage_runs.csv"] = [res](const fs::path& p) { io::write_outage_runs(p, *res); };
    for (const eval::RunReport* rep : {&res->first_without, &res->first_with}) {
      out["errors_" + rep->run + ".csv"] = [rep, res](const fs::path& p) {
        io::write_errors_csv(p, *rep);
      };
      out["cdf_" + rep->run + ".csv"] = [rep, res](const fs::path& p) {
        io::write_cdf_csv(p, rep->cdf);
      };
      out["gates_" + rep->run + ".csv"] = [rep, res](const fs::path& p) {
        io::write_gates_csv(p, *rep);
      };
    }
  } else if (rc.mode == "noise-sweep") {
    const auto& ns = sc.noise_sweep;
    if (ns.range_variances.empty() && ns.angle_variances.empty()) {
      throw ConfigError("noise-sweep needs range_variances_m2 or angle_variances_deg2");
    }
    auto res = std::make_shared<eval::NoiseSweepResult>(eval::run_noise_sweep(sc, cache, rc.seed));
    out["summary.csv"] = [res](const fs::path& p) { io::write_noise_summary(p, *res); };
    out["noise_runs.csv"] = [res](const fs::path& p) { io::write_noise_runs(p, *res); };
    for (const auto& level : res->levels) {
      const std::string tag = level.domain + "_" + io::fmt(level.variance);
      const auto* lv = &level;
      out["cdf_" + tag + "_without_sbr.csv"] = [lv, res](const fs::path& p) {
        io::write_cdf_csv(p, eval::error_cdf(lv->pooled_without));
      };
      out["cdf_" + tag + "_with_sbr.csv"] = [lv, res](const fs::path& p) {
        io::write_cdf_csv(p, eval::error_cdf(lv->pooled_with));
      };
    }
  } else {
    auto rows = std::make_shared<std::vector<eval::DriftRow>>(eval::run_drift_profile(sc, rc.seed));
    out["drift.csv"] = [rows](const fs::path& p) { io::write_drift_csv(p, *rows); };
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Integrated 5G LoS / multipath / INS positioning simulator"};
  std::string config_path;
  std::string output_dir;
  std::uint64_t seed_override = 0;
  app.add_option("-c,--config", config_path, "Scenario file (JSON)")->required();
  app.add_option("-o,--output-dir", output_dir, "Directory for reports");
  auto* seed_opt = app.add_option("-s,--seed", seed_override, "Override the scenario seed");
  app.set_version_flag("--version", kVersion);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kConfig, "usage", e.what());
  }

  try {
    const fs::path config = config_path;
    const json doc = mpnav::io::read_json_file(config);
    mpnav::io::RunConfig rc = mpnav::io::run_config_from_json(doc);
    if (*seed_opt) rc.seed = seed_override;
    const mpnav::eval::Scenario sc = mpnav::io::scenario_from_json(doc, config.parent_path());

    fs::path out_dir = rc.output_dir.empty() ? fs::path(".") : fs::path(rc.output_dir);
    if (const char* env = std::getenv("MPNAV_OUTPUT_DIR"); env && *env) out_dir = env;
    if (!output_dir.empty()) out_dir = output_dir;

    const Outputs outputs = run_mode(rc, sc);

    json manifest = {{"tool", "mpnav"},
                     {"version", kVersion},
                     {"mode", rc.mode},
                     {"seed", rc.seed},
                     {"with_sbr", rc.with_sbr},
                     {"scenario_file", config.filename().string()},
                     {"eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                           std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                           std::to_string(EIGEN_MINOR_VERSION)},
                     {"config", doc}};
    json files = json::array();
    for (const auto& [name, _] : outputs) files.push_back(name);
    manifest["outputs"] = files;

    fs::create_directories(out_dir);
    for (const auto& [name, write] : outputs) write(out_dir / name);
    mpnav::io::write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
    return kOk;
  } catch (const mpnav::ConfigError& e) {
    return fail(kConfig, "config", e.what());
  } catch (const mpnav::GeometryError& e) {
    return fail(kGeometry, "geometry", e.what());
  } catch (const mpnav::NumericError& e) {
    return fail(kNumeric, "numeric", e.what());
  } catch (const std::exception& e) {
    return fail(kOther, "internal", e.what());
  }
}
