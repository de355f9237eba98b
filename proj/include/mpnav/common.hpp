#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mpnav {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s, exact
inline constexpr double kGravity = 9.80665;             // m/s^2
inline constexpr double kPi = std::numbers::pi;

/// Navigation-frame gravity vector (ENU, pointing down).
inline Vec3 gravity_enu() { return {0.0, 0.0, -kGravity}; }

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Wraps an angle into (-pi, pi].
inline double wrap_pi(double a) {
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

/// Azimuth (CCW from East) and elevation (above horizontal) of a direction.
struct AzEl {
  double az = 0.0;
  double el = 0.0;
};

inline AzEl direction_angles(const Vec3& u) {
  const double horiz = std::hypot(u.x(), u.y());
  return {std::atan2(u.y(), u.x()), std::atan2(u.z(), horiz)};
}

inline Vec3 unit_from_angles(double az, double el) {
  const double ce = std::cos(el);
  return {ce * std::cos(az), ce * std::sin(az), std::sin(el)};
}

using Quat = Eigen::Quaterniond;

/// Body-to-navigation rotation from (roll, pitch, yaw), Z-Y-X order, body axes
/// forward-left-up so that zero attitude faces East.
inline Quat quat_from_rpy(const Vec3& rpy) {
  return Quat(Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) *
              Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
              Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()));
}

inline Vec3 rpy_from_quat(const Quat& q) {
  const Mat3 r = q.toRotationMatrix();
  const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  const double roll = std::atan2(r(2, 1), r(2, 2));
  const double yaw = std::atan2(r(1, 0), r(0, 0));
  return {roll, pitch, yaw};
}

/// Exponential map of a rotation vector.
inline Quat quat_exp(const Vec3& rotvec) {
  const double angle = rotvec.norm();
  if (angle < 1e-12) {
    Quat q(1.0, 0.5 * rotvec.x(), 0.5 * rotvec.y(), 0.5 * rotvec.z());
    return q.normalized();
  }
  return Quat(Eigen::AngleAxisd(angle, rotvec / angle));
}

/// Logarithm map, returns the rotation vector with angle in [0, pi].
inline Vec3 quat_log(const Quat& q_in) {
  Quat q = q_in.normalized();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const Vec3 v = q.vec();
  const double s = v.norm();
  if (s < 1e-12) return 2.0 * v;
  return 2.0 * std::atan2(s, q.w()) * v / s;
}

// Error categories; the CLI maps each onto a distinct exit code.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct GeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mpnav
