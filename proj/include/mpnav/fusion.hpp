#pragma once

#include "mpnav/fixes.hpp"
#include "mpnav/ins.hpp"

#include <span>
#include <vector>

/// Error-state unscented Kalman filter: INS mechanization drives the
/// prediction, position fixes drive the updates.
namespace mpnav::fusion {

inline constexpr int kStateDim = 15;
using StateVec = Eigen::Matrix<double, kStateDim, 1>;
using StateMat = Eigen::Matrix<double, kStateDim, kStateDim>;

// State layout.
inline constexpr int kPos = 0;
inline constexpr int kVel = 3;
inline constexpr int kAtt = 6;  // attitude error angles, body frame
inline constexpr int kGyroBias = 9;
inline constexpr int kAccelBias = 12;

/// x = [p, v, attitude error, gyro bias, accel bias] about the nominal
/// quaternion. The attitude error is folded into q_bn after every step, so
/// its mean is zero between steps.
struct FilterState {
  StateVec x = StateVec::Zero();
  Quat q_bn = Quat::Identity();
  StateMat P = StateMat::Identity();
  double t = 0.0;

  ins::NavState nav() const;
};

/// Chi-square 99.9% quantile with three degrees of freedom.
inline constexpr double kNisGate3Dof = 16.2662361962381;

struct UkfParams {
  double alpha = 0.5;
  double beta = 2.0;
  double kappa = 0.0;
  StateMat Q = StateMat::Zero();  // process noise density, added as Q * dt
  Mat3 R_los = Mat3::Identity();
  Mat3 R_sbr = Mat3::Identity();
  double nis_gate = kNisGate3Dof;

  void validate() const;
};

/// Process noise consistent with an IMU grade sampled at `imu_rate`.
StateMat process_noise_for(const synth::ImuGrade& grade, double imu_rate,
                           double bias_walk = 1e-12);

struct SigmaPoints {
  std::vector<Eigen::VectorXd> points;
  Eigen::VectorXd wm;
  Eigen::VectorXd wc;
};

/// Scaled unscented transform: lambda = alpha^2 (n + kappa) - n and points
/// mean +/- columns of chol((n + lambda) P). Throws NumericError when the
/// Cholesky factorisation fails.
SigmaPoints sigma_points(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                         double alpha, double beta, double kappa);

/// Propagates every sigma point through the IMU batch (each with its own
/// biases), recombines, then adds Q * (batch duration).
FilterState predict(const FilterState& fs, std::span<const synth::ImuSample> batch,
                    double dt, const UkfParams& params);

struct UpdateResult {
  FilterState state;
  double nis = 0.0;
  bool applied = false;  // false when the innovation gate fired
};

/// Position-only update h(x) = p. The gain comes from the unscented
/// transform; the covariance uses the Joseph form, which is exact here since h
/// is linear.
UpdateResult update_position(const FilterState& fs, const fixes::Fix& fix, const Mat3& R,
                             const UkfParams& params);

/// Initial state at a nominal navigation solution.
FilterState make_state(const ins::NavState& nav, const StateMat& P0, double t);

/// Minimum eigenvalue of the symmetric part of P.
double min_eigenvalue(const StateMat& P);

/// Normalised estimation error squared against a truth navigation state.
double nees(const FilterState& fs, const ins::NavState& truth);

/// Error vector (truth minus estimate) in the filter's state coordinates.
StateVec state_error(const FilterState& fs, const ins::NavState& truth);

}  // namespace mpnav::fusion
