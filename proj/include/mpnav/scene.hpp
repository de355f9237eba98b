#pragma once

#include "mpnav/common.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

/// Geometric world model: base stations, finite vertical reflector walls and
/// the mirror-image construction of reflected propagation paths.
namespace mpnav::scene {

struct BaseStation {
  std::string id;
  Vec3 p = Vec3::Zero();  // ENU, m
};

/// Finite vertical rectangle standing on the horizontal segment a-b.
///
/// The unit normal is the left-hand perpendicular of (b - a). Both faces
/// reflect.
class Wall {
 public:
  Wall(std::string id, const Vec2& a, const Vec2& b, double z0, double height,
       double reflection_loss_db = 6.0);

  const std::string& id() const { return id_; }
  const Vec2& a() const { return a_; }
  const Vec2& b() const { return b_; }
  double z0() const { return z0_; }
  double height() const { return height_; }
  double length() const { return length_; }
  double reflection_loss_db() const { return loss_db_; }
  /// Horizontal unit normal (z = 0).
  const Vec3& normal() const { return normal_; }

  /// Signed distance of p from the infinite wall plane along normal().
  double signed_distance(const Vec3& p) const;
  /// True iff p (assumed on the plane) lies inside the closed rectangle.
  bool contains_planar(const Vec3& p) const;

 private:
  std::string id_;
  Vec2 a_;
  Vec2 b_;
  double z0_;
  double height_;
  double loss_db_;
  double length_;
  Vec2 dir_;  // unit along a->b
  Vec3 normal_;
};

struct Pose {
  double t = 0.0;          // s
  Vec3 p = Vec3::Zero();   // ENU, m
  Vec3 v = Vec3::Zero();   // ENU, m/s
  Vec3 att = Vec3::Zero(); // roll, pitch, yaw (rad); yaw CCW from East
};

/// Single-bounce specular path.
struct SbrPath {
  std::string bs_id;
  std::string wall_id;
  Vec3 q = Vec3::Zero();    // reflection point
  double d1 = 0.0;          // BS -> q
  double d2 = 0.0;          // q -> UE
  double length = 0.0;      // d1 + d2
  Vec3 u_d = Vec3::UnitX(); // departure direction at the BS
  Vec3 u_a = Vec3::UnitX(); // arrival direction at the UE, pointing toward q
};

/// Reflected path with an arbitrary number of bounces (used for two-bounce
/// paths, which the estimator must learn to reject).
struct MultiBouncePath {
  std::string bs_id;
  std::vector<Vec3> bounce_points;
  double length = 0.0;
  Vec3 u_d = Vec3::UnitX();
  Vec3 u_a = Vec3::UnitX();
  int bounces = 0;
  double reflection_loss_db = 0.0;  // accumulated over all bounces
};

/// Reflection of p across the infinite vertical plane of the wall.
Vec3 mirror_point(const Vec3& p, const Wall& wall);

/// Specular single-bounce path BS -> wall -> UE, or nullopt when the mirror
/// segment misses the finite wall or BS and UE sit on opposite sides.
std::optional<SbrPath> specular_path(const BaseStation& bs, const Vec3& ue,
                                     const Wall& wall);

/// True iff the closed segment [p0, p1] crosses no wall rectangle. Touching a
/// wall counts as blocked. Symmetric in the endpoints.
bool segment_clear(const Vec3& p0, const Vec3& p1, std::span<const Wall> walls);

bool los_visible(const BaseStation& bs, const Vec3& ue,
                 std::span<const Wall> walls);

/// Two-bounce path BS -> wall1 -> wall2 -> UE via the double mirror image.
std::optional<MultiBouncePath> double_bounce_path(const BaseStation& bs,
                                                  const Vec3& ue,
                                                  const Wall& wall1,
                                                  const Wall& wall2);

/// Promotes a single-bounce path into the generic record.
MultiBouncePath as_multi_bounce(const SbrPath& path, const Wall& wall);

}  // namespace mpnav::scene
