#include "mpnav/identify.hpp"

#include <cmath>
#include <stdexcept>

namespace mpnav::identify {

void GateConfig::validate() const {
  if (!(range_consistency_threshold >= 0.0) || !(elevation_consistency_eps >= 0.0) ||
      !(residual_threshold >= 0.0) || !(motion_margin >= 0.0)) {
    throw ConfigError("gate thresholds must be non-negative");
  }
}

double rss_range(double rss, const synth::PathLossModel& plm) {
  return plm.distance_for(rss);
}

namespace {

bool consistent(double d_time, double rss, const synth::PathLossModel& plm,
                const GateConfig& cfg) {
  return std::abs(d_time - rss_range(rss, plm)) <= cfg.range_consistency_threshold;
}

}  // namespace

bool classify_los(const synth::LosObs& obs, const synth::PathLossModel& plm,
                  const GateConfig& cfg) {
  return consistent(0.5 * kSpeedOfLight * obs.rtt, obs.rss, plm, cfg);
}

bool classify_los(const synth::SbrObs& obs, const synth::PathLossModel& plm,
                  const GateConfig& cfg) {
  return consistent(kSpeedOfLight * obs.toa, obs.rss, plm, cfg);
}

bool elevation_consistent(const synth::SbrObs& obs, const GateConfig& cfg) {
  // u_d,z = sin(aod_el); the reversed arrival direction has z = -sin(aoa_el).
  return std::abs(std::sin(obs.aod_el) + std::sin(obs.aoa_el)) <=
         cfg.elevation_consistency_eps;
}

bool oori_check(const synth::SbrObs& obs, double fix_residual, const GateConfig& cfg) {
  return elevation_consistent(obs, cfg) && fix_residual <= cfg.residual_threshold;
}

bool single_bounce_rss(const synth::SbrObs& obs, const synth::PathLossModel& plm,
                       const GateConfig& cfg) {
  return consistent(kSpeedOfLight * obs.toa, obs.rss + plm.reflection_loss_db, plm, cfg);
}

bool oori_admit(const synth::SbrObs& obs, double fix_residual,
                const synth::PathLossModel& plm, const GateConfig& cfg) {
  return single_bounce_rss(obs, plm, cfg) && oori_check(obs, fix_residual, cfg);
}

bool motion_gate(const Vec3& candidate, const Vec3& prior, double odo_dist, double dt,
                 const GateConfig& cfg) {
  if (!(dt > 0.0)) throw std::invalid_argument("motion gate needs dt > 0");
  return (candidate - prior).norm() <= odo_dist + cfg.motion_margin;
}

GateCounts& GateCounts::operator+=(const GateCounts& o) {
  los_admitted += o.los_admitted;
  los_rejected += o.los_rejected;
  oori_admitted += o.oori_admitted;
  oori_rejected += o.oori_rejected;
  motion_admitted += o.motion_admitted;
  motion_rejected += o.motion_rejected;
  innovation_rejected += o.innovation_rejected;
  return *this;
}

}  // namespace mpnav::identify
