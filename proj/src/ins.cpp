#include "mpnav/ins.hpp"

#include <stdexcept>

namespace mpnav::ins {

NavState mechanize_step(const NavState& s, const synth::ImuSample& imu, double dt,
                        bool trapezoidal) {
  if (!(dt > 0.0) || dt > kMaxStep) {
    throw std::invalid_argument("mechanization step must satisfy 0 < dt <= 0.1 s");
  }
  if (!imu.gyro.allFinite() || !imu.accel.allFinite() || !s.p.allFinite() ||
      !s.v.allFinite() || !s.q_bn.coeffs().allFinite()) {
    throw NumericError("non-finite input to mechanization");
  }
  const Vec3 omega = imu.gyro - s.b_g;
  const Vec3 f_body = imu.accel - s.b_a;

  const Quat half = quat_exp(0.5 * dt * omega);
  const Quat q_mid = s.q_bn * half;

  NavState out = s;
  out.q_bn = (q_mid * half).normalized();
  out.v = s.v + (q_mid * f_body + gravity_enu()) * dt;
  out.p = s.p + (trapezoidal ? 0.5 * (s.v + out.v) : out.v) * dt;
  return out;
}

NavState state_from_pose(const scene::Pose& pose) {
  NavState s;
  s.p = pose.p;
  s.v = pose.v;
  s.q_bn = quat_from_rpy(pose.att);
  return s;
}

std::vector<DriftPoint> drift_profile(std::span<const scene::Pose> trajectory,
                                      const synth::ImuErrors& errors, double rate,
                                      std::uint64_t seed) {
  synth::Rng rng = synth::make_stream(seed, 0x1a0);
  const auto imu = synth::synth_imu(trajectory, errors, rate, rng);
  const double dt = 1.0 / rate;

  std::vector<DriftPoint> out;
  out.reserve(trajectory.size());
  NavState s = state_from_pose(trajectory.front());
  out.push_back({trajectory.front().t, 0.0});
  for (std::size_t k = 0; k < imu.size(); ++k) {
    s = mechanize_step(s, imu[k], dt);
    const scene::Pose& truth = trajectory[k + 1];
    out.push_back({truth.t, (s.p - truth.p).norm()});
  }
  return out;
}

}  // namespace mpnav::ins
