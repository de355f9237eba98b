#pragma once

#include "mpnav/pipeline.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

/// Scenario files, measurement logs and report writers.
namespace mpnav::io {

/// Run-level settings that live alongside the scenario in the same file.
struct RunConfig {
  std::string mode = "single";  // single | outage-sweep | noise-sweep | drift-profile
  std::uint64_t seed = 1;
  bool with_sbr = true;
  std::string output_dir;  // empty: current directory
};

RunConfig run_config_from_json(const nlohmann::json& doc);

/// Parses a scenario document. Relative paths inside it (measurement logs)
/// resolve against `base_dir`. Throws ConfigError on schema violations and
/// GeometryError on invalid walls or trajectories.
eval::Scenario scenario_from_json(const nlohmann::json& doc,
                                  const std::filesystem::path& base_dir = {});

/// Reads and parses a scenario file; a missing or unreadable file is a
/// ConfigError.
nlohmann::json read_json_file(const std::filesystem::path& path);
eval::Scenario load_scenario(const std::filesystem::path& path);

/// Line-delimited measurement log, one observation per line with unit
/// suffixed keys. Records are grouped into epochs by timestamp.
void write_measurement_log(std::ostream& out, const std::vector<synth::Epoch>& epochs);
std::vector<synth::Epoch> read_measurement_log(std::istream& in);

/// Fixed-precision decimal formatting shared by every CSV writer.
std::string fmt(double v);

void write_errors_csv(const std::filesystem::path& path, const eval::RunReport& rep);
void write_cdf_csv(const std::filesystem::path& path, const std::vector<eval::CdfPoint>& cdf);
void write_gates_csv(const std::filesystem::path& path, const eval::RunReport& rep);
void write_state_csv(const std::filesystem::path& path, const eval::RunReport& rep);
void write_single_summary(const std::filesystem::path& path, const eval::RunReport& rep);
void write_outage_summary(const std::filesystem::path& path, const eval::OutageSweepResult& r);
void write_outage_runs(const std::filesystem::path& path, const eval::OutageSweepResult& r);
void write_noise_summary(const std::filesystem::path& path, const eval::NoiseSweepResult& r);
void write_noise_runs(const std::filesystem::path& path, const eval::NoiseSweepResult& r);
void write_drift_csv(const std::filesystem::path& path, const std::vector<eval::DriftRow>& rows);

/// Text file written atomically through a temporary sibling.
void write_text(const std::filesystem::path& path, const std::string& content);

}  // namespace mpnav::io
