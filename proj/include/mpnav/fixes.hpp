#pragma once

#include "mpnav/synth.hpp"

#include <optional>
#include <span>
#include <vector>

/// Geometric position solvers for LoS and single-bounce multipath records.
namespace mpnav::fixes {

enum class FixSource { Los, Sbr };

struct Fix {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
  Mat3 cov = Mat3::Zero();  // m^2
  double residual = 0.0;    // RMS equation misfit, m
  FixSource source = FixSource::Los;
  int n_paths = 0;
  std::vector<double> path_residuals;  // per path, m (multipath fixes)
};

/// A reflected record paired with the BS it came from.
struct SbrMeasurement {
  scene::BaseStation bs;
  synth::SbrObs obs;
};

/// Position from RTT range and AoD direction. The covariance is the
/// first-order propagation of the declared range/angle variances.
Fix los_fix(const scene::BaseStation& bs, const synth::LosObs& obs,
            const synth::NoiseCfg& declared);

enum class SbrStatus { Ok, TooFewPaths, RankDeficient, LegOutOfRange };

struct SbrSolveOptions {
  double max_condition = 1e8;
};

struct SbrSolution {
  SbrStatus status = SbrStatus::TooFewPaths;
  std::optional<Fix> fix;
  double condition = 0.0;
  std::vector<double> first_legs;  // d1 per path
};

/// Joint least-squares fix from K >= 2 single-bounce records.
///
/// Path k contributes p - d1_k (u_d,k + u_a,k) = bs_k - L_k u_a,k, three rows
/// per path over the unknowns (p, d1_1 .. d1_K). Solved by SVD; rejected when
/// the condition number exceeds the limit or any d1_k falls outside [0, L_k].
SbrSolution sbr_fix(std::span<const SbrMeasurement> paths,
                    const synth::NoiseCfg& declared,
                    const SbrSolveOptions& options = {});

/// Single-path fix with the UE height pinned. Declines (nullopt) when
/// |u_d,z + u_a,z| <= eps_cond, which is always the case for vertical walls.
std::optional<Fix> sbr_fix_single(const SbrMeasurement& path, double known_height,
                                  double eps_cond, const synth::NoiseCfg& declared);

/// Distance from a reference position to the solution line of one path,
/// p(d1) = bs - L u_a + d1 (u_d + u_a) with d1 in [0, L].
struct PathResidual {
  Vec3 closest = Vec3::Zero();
  double first_leg = 0.0;
  double distance = 0.0;
};
PathResidual path_residual(const SbrMeasurement& path, const Vec3& reference);

/// Velocity by first-differencing two consecutive fixes.
Vec3 difference_velocity(const Fix& previous, const Fix& current);

}  // namespace mpnav::fixes
