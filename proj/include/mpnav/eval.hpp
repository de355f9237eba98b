#pragma once

#include "mpnav/scene.hpp"

#include <limits>
#include <span>
#include <vector>

/// Accuracy metrics over estimated and true trajectories.
namespace mpnav::eval {

struct TimedPoint {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
};

inline constexpr double kAlignTolerance = 1e-3;  // s

/// Root mean square 3D error. Every estimate inside [t_start, t_end] is paired
/// with the nearest truth sample, which must lie within kAlignTolerance.
/// Throws std::invalid_argument if no estimate falls in the window.
double rmse_3d(std::span<const TimedPoint> est, std::span<const scene::Pose> truth,
               double t_start = -std::numeric_limits<double>::infinity(),
               double t_end = std::numeric_limits<double>::infinity());

/// 100 * max 3D error / truth arc length, both over [t_start, t_end].
/// Throws std::domain_error when the vehicle did not move in the window.
double max_error_pct(std::span<const TimedPoint> est, std::span<const scene::Pose> truth,
                     double t_start, double t_end);

struct CdfPoint {
  double error = 0.0;
  double probability = 0.0;
};

/// Empirical CDF evaluated at each distinct sorted error value.
std::vector<CdfPoint> error_cdf(std::vector<double> errors);

/// Median with the mean of the two central values for even sizes.
double median(std::vector<double> values);

/// Linear-interpolated quantile, q in [0, 1].
double quantile(std::vector<double> values, double q);

}  // namespace mpnav::eval
