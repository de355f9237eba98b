#include "mpnav/fixes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mpnav::fixes {

namespace {

Vec3 d_unit_d_az(double az, double el) {
  return {-std::cos(el) * std::sin(az), std::cos(el) * std::cos(az), 0.0};
}

Vec3 d_unit_d_el(double az, double el) {
  return {-std::sin(el) * std::cos(az), -std::sin(el) * std::sin(az), std::cos(el)};
}

Mat3 symmetrized(const Mat3& m) { return 0.5 * (m + m.transpose()); }

struct PathGeometry {
  Vec3 bs;
  double length;
  Vec3 u_d;
  Vec3 u_a;
};

PathGeometry geometry_of(const SbrMeasurement& m) {
  return {m.bs.p, kSpeedOfLight * m.obs.toa, unit_from_angles(m.obs.aod_az, m.obs.aod_el),
          unit_from_angles(m.obs.aoa_az, m.obs.aoa_el)};
}

}  // namespace

Fix los_fix(const scene::BaseStation& bs, const synth::LosObs& obs,
            const synth::NoiseCfg& declared) {
  const double d = 0.5 * kSpeedOfLight * obs.rtt;
  if (!(d > 0.0)) throw std::invalid_argument("LoS fix needs a positive range");
  const Vec3 u = unit_from_angles(obs.aod_az, obs.aod_el);

  Eigen::Matrix3d jac;
  jac.col(0) = u;
  jac.col(1) = d * d_unit_d_az(obs.aod_az, obs.aod_el);
  jac.col(2) = d * d_unit_d_el(obs.aod_az, obs.aod_el);
  const double var_ang = std::pow(declared.sigma_angle_rad(), 2);
  const Vec3 var(declared.var_range, var_ang, var_ang);

  Fix fix;
  fix.t = obs.t;
  fix.p = bs.p + d * u;
  fix.cov = symmetrized(jac * var.asDiagonal() * jac.transpose());
  fix.source = FixSource::Los;
  fix.n_paths = 1;
  return fix;
}

SbrSolution sbr_fix(std::span<const SbrMeasurement> paths,
                    const synth::NoiseCfg& declared, const SbrSolveOptions& options) {
  SbrSolution out;
  const auto k_paths = static_cast<Eigen::Index>(paths.size());
  if (k_paths < 2) return out;

  const Eigen::Index rows = 3 * k_paths;
  const Eigen::Index cols = 3 + k_paths;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, cols);
  Eigen::VectorXd b(rows);
  std::vector<PathGeometry> geo;
  geo.reserve(paths.size());
  for (Eigen::Index k = 0; k < k_paths; ++k) {
    const PathGeometry g = geometry_of(paths[static_cast<std::size_t>(k)]);
    a.block<3, 3>(3 * k, 0).setIdentity();
    a.block<3, 1>(3 * k, 3 + k) = -(g.u_d + g.u_a);
    b.segment<3>(3 * k) = g.bs - g.length * g.u_a;
    geo.push_back(g);
  }

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  out.condition = smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
  if (!(out.condition <= options.max_condition)) {
    out.status = SbrStatus::RankDeficient;
    return out;
  }
  const Eigen::VectorXd x = svd.solve(b);

  for (Eigen::Index k = 0; k < k_paths; ++k) {
    const double d1 = x(3 + k);
    out.first_legs.push_back(d1);
    if (d1 < 0.0 || d1 > geo[static_cast<std::size_t>(k)].length) {
      out.status = SbrStatus::LegOutOfRange;
      return out;
    }
  }

  // First-order covariance: dx = A^+ dr, with r the equation residual and
  // the raw measurements (L, AoD az/el, AoA az/el) perturbed per path.
  const Eigen::MatrixXd pinv = svd.matrixV() * sv.cwiseInverse().asDiagonal() *
                               svd.matrixU().transpose();
  Eigen::MatrixXd g_mat = Eigen::MatrixXd::Zero(rows, 5 * k_paths);
  Eigen::VectorXd var(5 * k_paths);
  const double var_ang = std::pow(declared.sigma_angle_rad(), 2);
  for (Eigen::Index k = 0; k < k_paths; ++k) {
    const auto& obs = paths[static_cast<std::size_t>(k)].obs;
    const PathGeometry& g = geo[static_cast<std::size_t>(k)];
    const double d1 = x(3 + k);
    g_mat.block<3, 1>(3 * k, 5 * k + 0) = -g.u_a;
    g_mat.block<3, 1>(3 * k, 5 * k + 1) = d1 * d_unit_d_az(obs.aod_az, obs.aod_el);
    g_mat.block<3, 1>(3 * k, 5 * k + 2) = d1 * d_unit_d_el(obs.aod_az, obs.aod_el);
    g_mat.block<3, 1>(3 * k, 5 * k + 3) = (d1 - g.length) * d_unit_d_az(obs.aoa_az, obs.aoa_el);
    g_mat.block<3, 1>(3 * k, 5 * k + 4) = (d1 - g.length) * d_unit_d_el(obs.aoa_az, obs.aoa_el);
    var.segment<5>(5 * k) << declared.var_range, var_ang, var_ang, var_ang, var_ang;
  }
  const Eigen::MatrixXd jac = pinv.topRows(3) * g_mat;

  Fix fix;
  fix.t = paths.front().obs.t;
  fix.p = x.head<3>();
  fix.cov = symmetrized(jac * var.asDiagonal() * jac.transpose());
  const Eigen::VectorXd misfit = a * x - b;
  fix.residual = misfit.norm() / std::sqrt(static_cast<double>(rows));
  for (Eigen::Index k = 0; k < k_paths; ++k) {
    fix.path_residuals.push_back(misfit.segment<3>(3 * k).norm());
  }
  fix.source = FixSource::Sbr;
  fix.n_paths = static_cast<int>(k_paths);
  out.fix = std::move(fix);
  out.status = SbrStatus::Ok;
  return out;
}

namespace {

std::optional<Vec3> solve_single(const PathGeometry& g, double height, double eps_cond) {
  const Vec3 w = g.u_d + g.u_a;
  if (!(std::abs(w.z()) > eps_cond)) return std::nullopt;
  const Vec3 base = g.bs - g.length * g.u_a;
  const double d1 = (height - base.z()) / w.z();
  if (d1 < 0.0 || d1 > g.length) return std::nullopt;
  Vec3 p = base + d1 * w;
  p.z() = height;
  return p;
}

}  // namespace

std::optional<Fix> sbr_fix_single(const SbrMeasurement& path, double known_height,
                                  double eps_cond, const synth::NoiseCfg& declared) {
  const PathGeometry g = geometry_of(path);
  const auto p = solve_single(g, known_height, eps_cond);
  if (!p) return std::nullopt;

  // Covariance by central differences over the five raw measurements.
  const auto& o = path.obs;
  const double var_ang = std::pow(declared.sigma_angle_rad(), 2);
  const double var[5] = {declared.var_range, var_ang, var_ang, var_ang, var_ang};
  const double steps[5] = {1e-3, 1e-7, 1e-7, 1e-7, 1e-7};
  Mat3 cov = Mat3::Zero();
  for (int i = 0; i < 5; ++i) {
    if (var[i] == 0.0) continue;
    auto perturbed = [&](double sign) {
      double len = g.length, daz = o.aod_az, del = o.aod_el, aaz = o.aoa_az, ael = o.aoa_el;
      double* target[5] = {&len, &daz, &del, &aaz, &ael};
      *target[i] += sign * steps[i];
      return solve_single({g.bs, len, unit_from_angles(daz, del), unit_from_angles(aaz, ael)},
                          known_height, eps_cond);
    };
    const auto plus = perturbed(1.0);
    const auto minus = perturbed(-1.0);
    if (!plus || !minus) return std::nullopt;
    const Vec3 col = (*plus - *minus) / (2.0 * steps[i]);
    cov += var[i] * col * col.transpose();
  }

  Fix fix;
  fix.t = o.t;
  fix.p = *p;
  fix.cov = symmetrized(cov);
  fix.source = FixSource::Sbr;
  fix.n_paths = 1;
  return fix;
}

PathResidual path_residual(const SbrMeasurement& path, const Vec3& reference) {
  const PathGeometry g = geometry_of(path);
  const Vec3 w = g.u_d + g.u_a;
  const Vec3 base = g.bs - g.length * g.u_a;
  const double ww = w.squaredNorm();
  double d1 = ww > 1e-18 ? (reference - base).dot(w) / ww : 0.0;
  d1 = std::clamp(d1, 0.0, g.length);
  PathResidual r;
  r.first_leg = d1;
  r.closest = base + d1 * w;
  r.distance = (r.closest - reference).norm();
  return r;
}

Vec3 difference_velocity(const Fix& previous, const Fix& current) {
  const double dt = current.t - previous.t;
  if (!(dt > 0.0)) throw std::invalid_argument("fixes must be strictly increasing in time");
  return (current.p - previous.p) / dt;
}

}  // namespace mpnav::fixes
