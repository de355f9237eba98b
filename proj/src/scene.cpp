#include "mpnav/scene.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace mpnav::scene {

Wall::Wall(std::string id, const Vec2& a, const Vec2& b, double z0,
           double height, double reflection_loss_db)
    : id_(std::move(id)),
      a_(a),
      b_(b),
      z0_(z0),
      height_(height),
      loss_db_(reflection_loss_db) {
  if (!a.allFinite() || !b.allFinite() || !std::isfinite(z0) ||
      !std::isfinite(height)) {
    throw GeometryError("wall '" + id_ + "': non-finite geometry");
  }
  length_ = (b - a).norm();
  if (!(length_ > 0.0)) throw GeometryError("wall '" + id_ + "': zero length");
  if (!(height > 0.0)) throw GeometryError("wall '" + id_ + "': height <= 0");
  if (!(reflection_loss_db >= 0.0)) {
    throw GeometryError("wall '" + id_ + "': negative reflection loss");
  }
  dir_ = (b - a) / length_;
  normal_ = Vec3(-dir_.y(), dir_.x(), 0.0);
}

double Wall::signed_distance(const Vec3& p) const {
  return (p.x() - a_.x()) * normal_.x() + (p.y() - a_.y()) * normal_.y();
}

bool Wall::contains_planar(const Vec3& p) const {
  const double s = (p.x() - a_.x()) * dir_.x() + (p.y() - a_.y()) * dir_.y();
  return s >= 0.0 && s <= length_ && p.z() >= z0_ && p.z() <= z0_ + height_;
}

Vec3 mirror_point(const Vec3& p, const Wall& wall) {
  return p - 2.0 * wall.signed_distance(p) * wall.normal();
}

namespace {

// Intersection of segment [p0, p1] with the wall plane, given the signed
// distances of its endpoints (which must straddle or touch the plane).
Vec3 plane_crossing(const Vec3& p0, const Vec3& p1, double s0, double s1) {
  const double t = s0 / (s0 - s1);
  return p0 + t * (p1 - p0);
}

// Segment lying inside the wall plane: clip against the rectangle in the
// (along-wall, height) coordinates.
bool coplanar_overlap(const Vec3& p0, const Vec3& p1, const Wall& wall) {
  const Vec2 dir = (wall.b() - wall.a()) / wall.length();
  auto along = [&](const Vec3& p) {
    return (p.x() - wall.a().x()) * dir.x() + (p.y() - wall.a().y()) * dir.y();
  };
  const double s0 = along(p0), s1 = along(p1);
  double lo = 0.0, hi = 1.0;
  auto clip = [&](double v0, double v1, double vmin, double vmax) {
    const double dv = v1 - v0;
    if (dv == 0.0) return v0 >= vmin && v0 <= vmax;
    double ta = (vmin - v0) / dv, tb = (vmax - v0) / dv;
    if (ta > tb) std::swap(ta, tb);
    lo = std::max(lo, ta);
    hi = std::min(hi, tb);
    return lo <= hi;
  };
  return clip(s0, s1, 0.0, wall.length()) &&
         clip(p0.z(), p1.z(), wall.z0(), wall.z0() + wall.height());
}

bool segment_hits(const Vec3& p0, const Vec3& p1, const Wall& wall) {
  const double s0 = wall.signed_distance(p0);
  const double s1 = wall.signed_distance(p1);
  if ((s0 > 0.0 && s1 > 0.0) || (s0 < 0.0 && s1 < 0.0)) return false;
  if (s0 == 0.0 && s1 == 0.0) return coplanar_overlap(p0, p1, wall);
  return wall.contains_planar(plane_crossing(p0, p1, s0, s1));
}

bool lex_less(const Vec3& a, const Vec3& b) {
  return std::lexicographical_compare(a.data(), a.data() + 3, b.data(),
                                      b.data() + 3);
}

}  // namespace

std::optional<SbrPath> specular_path(const BaseStation& bs, const Vec3& ue,
                                     const Wall& wall) {
  const double s_bs = wall.signed_distance(bs.p);
  const double s_ue = wall.signed_distance(ue);
  if (!(s_bs * s_ue > 0.0)) return std::nullopt;

  const Vec3 image = mirror_point(bs.p, wall);
  const Vec3 q = plane_crossing(image, ue, -s_bs, s_ue);
  if (!wall.contains_planar(q)) return std::nullopt;

  SbrPath path;
  path.bs_id = bs.id;
  path.wall_id = wall.id();
  path.q = q;
  path.d1 = (q - bs.p).norm();
  path.d2 = (ue - q).norm();
  if (path.d1 == 0.0 || path.d2 == 0.0) return std::nullopt;
  path.length = path.d1 + path.d2;
  path.u_d = (q - bs.p) / path.d1;
  path.u_a = (q - ue) / path.d2;
  return path;
}

bool segment_clear(const Vec3& p0, const Vec3& p1, std::span<const Wall> walls) {
  // Canonical endpoint order keeps the floating-point result symmetric.
  const bool swap = lex_less(p1, p0);
  const Vec3& a = swap ? p1 : p0;
  const Vec3& b = swap ? p0 : p1;
  for (const Wall& w : walls) {
    if (segment_hits(a, b, w)) return false;
  }
  return true;
}

bool los_visible(const BaseStation& bs, const Vec3& ue,
                 std::span<const Wall> walls) {
  return segment_clear(bs.p, ue, walls);
}

std::optional<MultiBouncePath> double_bounce_path(const BaseStation& bs,
                                                  const Vec3& ue,
                                                  const Wall& wall1,
                                                  const Wall& wall2) {
  if (&wall1 == &wall2) return std::nullopt;
  const Vec3 image1 = mirror_point(bs.p, wall1);
  const Vec3 image2 = mirror_point(image1, wall2);

  // Last leg: UE back toward the second image, crossing wall2.
  const double s_ue2 = wall2.signed_distance(ue);
  const double s_img1_2 = wall2.signed_distance(image1);
  if (!(s_ue2 * s_img1_2 > 0.0)) return std::nullopt;
  const Vec3 q2 = plane_crossing(image2, ue, -s_img1_2, s_ue2);
  if (!wall2.contains_planar(q2)) return std::nullopt;

  // Middle leg: q2 toward the first image, crossing wall1.
  const double s_bs1 = wall1.signed_distance(bs.p);
  const double s_q2_1 = wall1.signed_distance(q2);
  if (!(s_bs1 * s_q2_1 > 0.0)) return std::nullopt;
  const Vec3 q1 = plane_crossing(image1, q2, -s_bs1, s_q2_1);
  if (!wall1.contains_planar(q1)) return std::nullopt;

  const double l1 = (q1 - bs.p).norm();
  const double l2 = (q2 - q1).norm();
  const double l3 = (ue - q2).norm();
  if (l1 == 0.0 || l2 == 0.0 || l3 == 0.0) return std::nullopt;

  MultiBouncePath path;
  path.bs_id = bs.id;
  path.bounce_points = {q1, q2};
  path.length = l1 + l2 + l3;
  path.u_d = (q1 - bs.p) / l1;
  path.u_a = (q2 - ue) / l3;
  path.bounces = 2;
  path.reflection_loss_db = wall1.reflection_loss_db() + wall2.reflection_loss_db();
  return path;
}

MultiBouncePath as_multi_bounce(const SbrPath& path, const Wall& wall) {
  MultiBouncePath out;
  out.bs_id = path.bs_id;
  out.bounce_points = {path.q};
  out.length = path.length;
  out.u_d = path.u_d;
  out.u_a = path.u_a;
  out.bounces = 1;
  out.reflection_loss_db = wall.reflection_loss_db();
  return out;
}

}  // namespace mpnav::scene
