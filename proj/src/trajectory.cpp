#include "mpnav/trajectory.hpp"

#include <algorithm>
#include <cmath>

namespace mpnav::scene {

namespace {

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }
Vec2 left_of(const Vec2& d) { return {-d.y(), d.x()}; }

}  // namespace

PlanarPath::PlanarPath(const std::vector<Vec2>& points, bool closed,
                       double corner_radius)
    : closed_(closed) {
  const std::size_t n = points.size();
  if (n < 2) throw GeometryError("path needs at least two waypoints");
  if (closed && n < 3) throw GeometryError("closed path needs three waypoints");
  if (!(corner_radius >= 0.0)) throw GeometryError("negative corner radius");

  auto pt = [&](std::size_t i) -> const Vec2& { return points[i % n]; };
  auto seg_dir = [&](std::size_t i) {
    const Vec2 d = pt(i + 1) - pt(i);
    if (d.norm() == 0.0) throw GeometryError("duplicate consecutive waypoints");
    return Vec2(d.normalized());
  };

  // Fillet at vertex i joining segment (i-1, i) to (i, i+1).
  struct Corner {
    Vec2 entry, exit, center;
    double angle = 0.0, turn = 0.0, tangent_len = 0.0;
  };
  auto corner_at = [&](std::size_t i) {
    Corner c;
    const Vec2 din = seg_dir(i + n - 1);
    const Vec2 dout = seg_dir(i);
    const double sin_t = cross2(din, dout);
    const double cos_t = din.dot(dout);
    c.angle = std::abs(std::atan2(sin_t, cos_t));
    c.turn = sin_t >= 0.0 ? 1.0 : -1.0;
    c.tangent_len = corner_radius * std::tan(0.5 * c.angle);
    c.entry = pt(i) - c.tangent_len * din;
    c.exit = pt(i) + c.tangent_len * dout;
    c.center = c.entry + c.turn * corner_radius * left_of(din);
    return c;
  };

  auto push_line = [&](const Vec2& from, const Vec2& to) {
    const double len = (to - from).norm();
    Piece p;
    p.s0 = total_;
    p.len = len;
    p.start = from;
    p.dir = len > 0.0 ? Vec2((to - from) / len) : Vec2(1.0, 0.0);
    pieces_.push_back(p);
    total_ += len;
  };
  auto push_arc = [&](const Corner& c) {
    if (c.angle < 1e-12 || corner_radius == 0.0) return;
    Piece p;
    p.s0 = total_;
    p.arc = true;
    p.radius = corner_radius;
    p.center = c.center;
    p.turn = c.turn;
    p.phi0 = std::atan2(c.entry.y() - c.center.y(), c.entry.x() - c.center.x());
    p.len = corner_radius * c.angle;
    pieces_.push_back(p);
    total_ += p.len;
  };

  if (closed) {
    std::vector<Corner> corners;
    for (std::size_t i = 0; i < n; ++i) corners.push_back(corner_at(i));
    for (std::size_t i = 0; i < n; ++i) {
      const Corner& a = corners[i];
      const Corner& b = corners[(i + 1) % n];
      const double seg = (pt(i + 1) - pt(i)).norm();
      if (a.tangent_len + b.tangent_len > seg + 1e-9) {
        throw GeometryError("corner radius too large for waypoint spacing");
      }
      push_line(a.exit, b.entry);
      push_arc(b);
    }
  } else {
    Vec2 cursor = points.front();
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const Corner c = corner_at(i);
      const double avail = (points[i] - cursor).norm();
      if (c.tangent_len > avail + 1e-9) {
        throw GeometryError("corner radius too large for waypoint spacing");
      }
      push_line(cursor, c.entry);
      push_arc(c);
      cursor = c.exit;
    }
    push_line(cursor, points.back());
  }
}

const PlanarPath::Piece& PlanarPath::locate(double& s) const {
  if (closed_) {
    s = std::fmod(s, total_);
    if (s < 0.0) s += total_;
  } else {
    s = std::clamp(s, 0.0, total_);
  }
  auto it = std::upper_bound(pieces_.begin(), pieces_.end(), s,
                             [](double v, const Piece& p) { return v < p.s0; });
  if (it != pieces_.begin()) --it;
  s -= it->s0;
  return *it;
}

Vec2 PlanarPath::point(double s) const {
  const Piece& p = locate(s);
  if (!p.arc) return p.start + s * p.dir;
  const double phi = p.phi0 + p.turn * s / p.radius;
  return p.center + p.radius * Vec2(std::cos(phi), std::sin(phi));
}

Vec2 PlanarPath::tangent(double s) const {
  const Piece& p = locate(s);
  if (!p.arc) return p.dir;
  const double phi = p.phi0 + p.turn * s / p.radius;
  return p.turn * Vec2(-std::sin(phi), std::cos(phi));
}

double speed_at(const std::vector<SpeedKnot>& profile, double t) {
  if (profile.empty()) throw ConfigError("empty speed profile");
  if (t <= profile.front().t) return profile.front().speed;
  for (std::size_t i = 1; i < profile.size(); ++i) {
    const SpeedKnot& a = profile[i - 1];
    const SpeedKnot& b = profile[i];
    if (t <= b.t) {
      const double f = (t - a.t) / (b.t - a.t);
      return a.speed + f * (b.speed - a.speed);
    }
  }
  return profile.back().speed;
}

double distance_at(const std::vector<SpeedKnot>& profile, double t) {
  if (profile.empty()) throw ConfigError("empty speed profile");
  double dist = 0.0;
  double t_prev = 0.0;
  double v_prev = speed_at(profile, 0.0);
  for (const SpeedKnot& k : profile) {
    if (k.t <= t_prev) continue;
    const double t_end = std::min(k.t, t);
    const double v_end = speed_at(profile, t_end);
    dist += 0.5 * (v_prev + v_end) * (t_end - t_prev);
    t_prev = t_end;
    v_prev = v_end;
    if (t_prev >= t) return dist;
  }
  return dist + v_prev * (t - t_prev);
}

std::vector<Pose> sample_trajectory(const WaypointSpec& spec, double rate) {
  if (!(rate > 0.0)) throw ConfigError("sample rate must be positive");
  if (!(spec.duration > 0.0)) throw ConfigError("trajectory duration must be positive");
  for (std::size_t i = 1; i < spec.speed_profile.size(); ++i) {
    if (!(spec.speed_profile[i].t > spec.speed_profile[i - 1].t)) {
      throw ConfigError("speed profile knots must be strictly increasing in time");
    }
  }
  for (const SpeedKnot& k : spec.speed_profile) {
    if (k.speed < 0.0) throw ConfigError("negative speed in profile");
  }
  const PlanarPath path(spec.points, spec.closed, spec.corner_radius);
  const auto count = static_cast<std::size_t>(std::floor(spec.duration * rate + 1e-9)) + 1;

  std::vector<Pose> poses;
  poses.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double t = static_cast<double>(k) / rate;
    const double s = spec.start_offset + distance_at(spec.speed_profile, t);
    if (!path.closed() && s > path.length() + 1e-9) {
      throw GeometryError("trajectory runs past the end of an open path");
    }
    const Vec2 xy = path.point(s);
    const Vec2 tan = path.tangent(s);
    const double v = speed_at(spec.speed_profile, t);
    Pose pose;
    pose.t = t;
    pose.p = Vec3(xy.x(), xy.y(), spec.height);
    pose.v = Vec3(v * tan.x(), v * tan.y(), 0.0);
    pose.att = Vec3(0.0, 0.0, std::atan2(tan.y(), tan.x()));
    poses.push_back(pose);
  }
  return poses;
}

std::vector<Pose> resample_poses(const std::vector<Pose>& poses, double rate) {
  if (poses.size() < 2) throw ConfigError("need at least two trajectory samples");
  for (std::size_t i = 1; i < poses.size(); ++i) {
    if (!(poses[i].t > poses[i - 1].t)) {
      throw ConfigError("trajectory samples must be strictly increasing in time");
    }
  }
  const double t0 = poses.front().t;
  const double span = poses.back().t - t0;
  const auto count = static_cast<std::size_t>(std::floor(span * rate + 1e-9)) + 1;

  std::vector<Pose> out;
  out.reserve(count);
  std::size_t i = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const double t = t0 + static_cast<double>(k) / rate;
    while (i + 2 < poses.size() && t > poses[i + 1].t) ++i;
    const Pose& a = poses[i];
    const Pose& b = poses[i + 1];
    const double h = b.t - a.t;
    const double s = std::clamp((t - a.t) / h, 0.0, 1.0);
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    Pose p;
    p.t = t;
    p.p = h00 * a.p + h10 * h * a.v + h01 * b.p + h11 * h * b.v;
    const double d00 = 6 * s2 - 6 * s, d10 = 3 * s2 - 4 * s + 1;
    const double d01 = -6 * s2 + 6 * s, d11 = 3 * s2 - 2 * s;
    p.v = (d00 * a.p + d01 * b.p) / h + d10 * a.v + d11 * b.v;
    Vec3 datt = b.att - a.att;
    for (int c = 0; c < 3; ++c) datt[c] = wrap_pi(datt[c]);
    p.att = a.att + s * datt;
    p.att.z() = wrap_pi(p.att.z());
    out.push_back(p);
  }
  return out;
}

double arc_length(std::span<const Pose> poses, double t_start, double t_end) {
  double total = 0.0;
  const Pose* prev = nullptr;
  for (const Pose& p : poses) {
    if (p.t < t_start || p.t > t_end) continue;
    if (prev) total += (p.p - prev->p).norm();
    prev = &p;
  }
  return total;
}

}  // namespace mpnav::scene
