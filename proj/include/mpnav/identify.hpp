#pragma once

#include "mpnav/synth.hpp"

/// Measurement admission gates: NLoS exclusion, single-bounce validation and
/// the motion constraint.
namespace mpnav::identify {

struct GateConfig {
  double range_consistency_threshold = 10.0;       // m
  double elevation_consistency_eps = deg2rad(0.5);  // dimensionless z mismatch
  double residual_threshold = 3.0;                 // m
  double motion_margin = 2.0;                      // m

  void validate() const;
};

/// Range implied by the RSS under the LoS path-loss model.
double rss_range(double rss, const synth::PathLossModel& plm);

/// Admits the record as LoS iff the time-based and RSS-based ranges agree
/// within the threshold.
bool classify_los(const synth::LosObs& obs, const synth::PathLossModel& plm,
                  const GateConfig& cfg);
bool classify_los(const synth::SbrObs& obs, const synth::PathLossModel& plm,
                  const GateConfig& cfg);

/// Vertical-reflector test: departure and (reversed) arrival directions must
/// share their vertical component, |sin(aod_el) + sin(aoa_el)| <= eps.
bool elevation_consistent(const synth::SbrObs& obs, const GateConfig& cfg);

/// Single-bounce admission: elevation consistency and a fix residual within
/// the threshold.
bool oori_check(const synth::SbrObs& obs, double fix_residual, const GateConfig& cfg);

/// Reflected-path counterpart of classify_los: the range implied by the RSS
/// after exactly one reflection loss must agree with c * toa within the range
/// consistency threshold. Higher-order paths carry extra loss per bounce.
bool single_bounce_rss(const synth::SbrObs& obs, const synth::PathLossModel& plm,
                       const GateConfig& cfg);

/// Complete single-bounce decision: RSS test plus oori_check.
bool oori_admit(const synth::SbrObs& obs, double fix_residual,
                const synth::PathLossModel& plm, const GateConfig& cfg);

/// Admits the candidate iff it lies within odometer distance plus margin of
/// the previous posterior.
bool motion_gate(const Vec3& candidate, const Vec3& prior, double odo_dist, double dt,
                 const GateConfig& cfg);

/// Per-gate decision counters.
struct GateCounts {
  long los_admitted = 0;
  long los_rejected = 0;
  long oori_admitted = 0;
  long oori_rejected = 0;
  long motion_admitted = 0;
  long motion_rejected = 0;
  long innovation_rejected = 0;

  GateCounts& operator+=(const GateCounts& o);
};

}  // namespace mpnav::identify
