#pragma once

#include "mpnav/synth.hpp"

#include <cstdint>
#include <span>
#include <vector>

/// Strapdown mechanization on a flat, non-rotating ENU frame.
namespace mpnav::ins {

struct NavState {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Quat q_bn = Quat::Identity();  // body -> nav
  Vec3 b_g = Vec3::Zero();       // gyro bias, rad/s
  Vec3 b_a = Vec3::Zero();       // accel bias, m/s^2
};

inline constexpr double kMaxStep = 0.1;  // s

/// One integration step over [t, t + dt].
///
/// Attitude advances by the exponential map of the bias-corrected rate;
/// specific force is resolved with the mid-interval attitude; position uses
/// the trapezoid of old and new velocity (or the new velocity when
/// `trapezoidal` is false).
NavState mechanize_step(const NavState& s, const synth::ImuSample& imu, double dt,
                        bool trapezoidal = true);

NavState state_from_pose(const scene::Pose& pose);

struct DriftPoint {
  double t = 0.0;
  double error = 0.0;  // 3D position error, m
};

/// Free-inertial drift: mechanizes the IMU stream synthesized with `errors`
/// from a perfect initial state and reports the position error at every
/// trajectory sample. Trajectory must lie on the grid of `rate`.
std::vector<DriftPoint> drift_profile(std::span<const scene::Pose> trajectory,
                                      const synth::ImuErrors& errors, double rate,
                                      std::uint64_t seed);

}  // namespace mpnav::ins
