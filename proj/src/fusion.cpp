#include "mpnav/fusion.hpp"

#include <stdexcept>

namespace mpnav::fusion {

namespace {

constexpr double kPsdTolerance = -1e-6;

template <typename M>
bool is_psd(const M& m, double tol = -1e-12) {
  if (!m.allFinite()) return false;
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + m.cwiseAbs().maxCoeff())) {
    return false;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= tol * (1.0 + m.cwiseAbs().maxCoeff());
}

ins::NavState nav_at(const FilterState& fs, const Eigen::VectorXd& point) {
  ins::NavState s;
  s.p = point.segment<3>(kPos);
  s.v = point.segment<3>(kVel);
  s.q_bn = (fs.q_bn * quat_exp(point.segment<3>(kAtt))).normalized();
  s.b_g = point.segment<3>(kGyroBias);
  s.b_a = point.segment<3>(kAccelBias);
  return s;
}

StateVec to_state(const ins::NavState& s, const Quat& reference) {
  StateVec x;
  x.segment<3>(kPos) = s.p;
  x.segment<3>(kVel) = s.v;
  x.segment<3>(kAtt) = quat_log(reference.conjugate() * s.q_bn);
  x.segment<3>(kGyroBias) = s.b_g;
  x.segment<3>(kAccelBias) = s.b_a;
  return x;
}

void fold_attitude(FilterState& fs) {
  fs.q_bn = (fs.q_bn * quat_exp(fs.x.segment<3>(kAtt))).normalized();
  fs.x.segment<3>(kAtt).setZero();
}

StateMat symmetrized(const StateMat& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

ins::NavState FilterState::nav() const {
  ins::NavState s;
  s.p = x.segment<3>(kPos);
  s.v = x.segment<3>(kVel);
  s.q_bn = (q_bn * quat_exp(x.segment<3>(kAtt))).normalized();
  s.b_g = x.segment<3>(kGyroBias);
  s.b_a = x.segment<3>(kAccelBias);
  return s;
}

void UkfParams::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("UKF alpha must lie in (0, 1]");
  if (!is_psd(Q)) throw ConfigError("UKF process noise must be PSD");
  if (!is_psd(R_los) || !is_psd(R_sbr)) throw ConfigError("UKF measurement noise must be PSD");
  if (!(nis_gate > 0.0)) throw ConfigError("innovation gate must be positive");
}

StateMat process_noise_for(const synth::ImuGrade& grade, double imu_rate, double bias_walk) {
  if (!(imu_rate > 0.0)) throw ConfigError("IMU rate must be positive");
  StateMat q = StateMat::Zero();
  const double dt = 1.0 / imu_rate;
  q.block<3, 3>(kPos, kPos) = 1e-8 * Mat3::Identity();
  q.block<3, 3>(kVel, kVel) = grade.accel_noise * grade.accel_noise * dt * Mat3::Identity();
  q.block<3, 3>(kAtt, kAtt) = grade.gyro_noise * grade.gyro_noise * dt * Mat3::Identity();
  q.block<3, 3>(kGyroBias, kGyroBias) = bias_walk * Mat3::Identity();
  q.block<3, 3>(kAccelBias, kAccelBias) = bias_walk * Mat3::Identity();
  return q;
}

SigmaPoints sigma_points(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                         double alpha, double beta, double kappa) {
  const auto n = mean.size();
  if (cov.rows() != n || cov.cols() != n) {
    throw std::invalid_argument("sigma_points: covariance shape mismatch");
  }
  const double nd = static_cast<double>(n);
  const double lambda = alpha * alpha * (nd + kappa) - nd;
  const double scale = nd + lambda;
  if (!(scale > 0.0)) throw std::invalid_argument("sigma_points: n + lambda must be positive");

  const Eigen::LLT<Eigen::MatrixXd> llt(scale * cov);
  if (llt.info() != Eigen::Success) {
    throw NumericError("sigma_points: covariance is not positive definite");
  }
  const Eigen::MatrixXd root = llt.matrixL();

  SigmaPoints sp;
  sp.points.reserve(static_cast<std::size_t>(2 * n + 1));
  sp.points.push_back(mean);
  for (Eigen::Index i = 0; i < n; ++i) sp.points.push_back(mean + root.col(i));
  for (Eigen::Index i = 0; i < n; ++i) sp.points.push_back(mean - root.col(i));

  sp.wm = Eigen::VectorXd::Constant(2 * n + 1, 0.5 / scale);
  sp.wc = sp.wm;
  sp.wm(0) = lambda / scale;
  sp.wc(0) = lambda / scale + (1.0 - alpha * alpha + beta);
  return sp;
}

FilterState predict(const FilterState& fs, std::span<const synth::ImuSample> batch,
                    double dt, const UkfParams& params) {
  if (!(dt > 0.0)) throw std::invalid_argument("predict needs dt > 0");
  if (batch.empty()) return fs;

  const SigmaPoints sp = sigma_points(fs.x, fs.P, params.alpha, params.beta, params.kappa);
  std::vector<ins::NavState> propagated;
  propagated.reserve(sp.points.size());
  for (const auto& point : sp.points) {
    ins::NavState s = nav_at(fs, point);
    for (const synth::ImuSample& imu : batch) s = ins::mechanize_step(s, imu, dt);
    propagated.push_back(s);
  }

  const Quat q_ref = propagated.front().q_bn;
  StateVec mean = StateVec::Zero();
  for (std::size_t i = 0; i < propagated.size(); ++i) {
    mean += sp.wm(static_cast<Eigen::Index>(i)) * to_state(propagated[i], q_ref);
  }
  FilterState out;
  out.q_bn = (q_ref * quat_exp(mean.segment<3>(kAtt))).normalized();
  mean.segment<3>(kAtt).setZero();
  out.x = mean;

  StateMat cov = StateMat::Zero();
  for (std::size_t i = 0; i < propagated.size(); ++i) {
    const StateVec dev = to_state(propagated[i], out.q_bn) - mean;
    cov += sp.wc(static_cast<Eigen::Index>(i)) * dev * dev.transpose();
  }
  const double span = dt * static_cast<double>(batch.size());
  out.P = symmetrized(cov + params.Q * span);
  out.t = fs.t + span;
  if (!out.P.allFinite() || min_eigenvalue(out.P) < kPsdTolerance) {
    throw NumericError("predicted covariance is indefinite");
  }
  return out;
}

UpdateResult update_position(const FilterState& fs, const fixes::Fix& fix, const Mat3& R,
                             const UkfParams& params) {
  const SigmaPoints sp = sigma_points(fs.x, fs.P, params.alpha, params.beta, params.kappa);

  Vec3 z_mean = Vec3::Zero();
  for (std::size_t i = 0; i < sp.points.size(); ++i) {
    z_mean += sp.wm(static_cast<Eigen::Index>(i)) * sp.points[i].segment<3>(kPos);
  }
  Mat3 s = R;
  Eigen::Matrix<double, kStateDim, 3> pxz = Eigen::Matrix<double, kStateDim, 3>::Zero();
  for (std::size_t i = 0; i < sp.points.size(); ++i) {
    const double wc = sp.wc(static_cast<Eigen::Index>(i));
    const Vec3 dz = sp.points[i].segment<3>(kPos) - z_mean;
    const StateVec dx = sp.points[i] - fs.x;
    s += wc * dz * dz.transpose();
    pxz += wc * dx * dz.transpose();
  }
  s = 0.5 * (s + s.transpose());

  const Eigen::LDLT<Mat3> s_ldlt(s);
  if (s_ldlt.info() != Eigen::Success) throw NumericError("innovation covariance is singular");
  const Vec3 innovation = fix.p - z_mean;
  UpdateResult result;
  result.nis = innovation.dot(s_ldlt.solve(innovation));
  if (!std::isfinite(result.nis) || result.nis > params.nis_gate) {
    result.state = fs;
    result.applied = false;
    return result;
  }

  const Eigen::Matrix<double, kStateDim, 3> gain = s_ldlt.solve(pxz.transpose()).transpose();
  FilterState out = fs;
  out.x += gain * innovation;
  StateMat ikh = StateMat::Identity();
  ikh.leftCols<3>() -= gain;
  out.P = symmetrized(ikh * fs.P * ikh.transpose() + gain * R * gain.transpose());
  fold_attitude(out);
  result.state = out;
  result.applied = true;
  return result;
}

FilterState make_state(const ins::NavState& nav, const StateMat& P0, double t) {
  FilterState fs;
  fs.x = to_state(nav, nav.q_bn);
  fs.q_bn = nav.q_bn.normalized();
  fs.P = symmetrized(P0);
  fs.t = t;
  return fs;
}

double min_eigenvalue(const StateMat& P) {
  Eigen::SelfAdjointEigenSolver<StateMat> es(symmetrized(P), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

StateVec state_error(const FilterState& fs, const ins::NavState& truth) {
  StateVec e;
  const ins::NavState est = fs.nav();
  e.segment<3>(kPos) = truth.p - est.p;
  e.segment<3>(kVel) = truth.v - est.v;
  e.segment<3>(kAtt) = quat_log(est.q_bn.conjugate() * truth.q_bn);
  e.segment<3>(kGyroBias) = truth.b_g - est.b_g;
  e.segment<3>(kAccelBias) = truth.b_a - est.b_a;
  return e;
}

double nees(const FilterState& fs, const ins::NavState& truth) {
  const StateVec e = state_error(fs, truth);
  const Eigen::LDLT<StateMat> ldlt(fs.P);
  return e.dot(ldlt.solve(e));
}

}  // namespace mpnav::fusion
