#pragma once

#include "mpnav/scene.hpp"

#include <span>
#include <vector>

namespace mpnav::scene {

struct SpeedKnot {
  double t = 0.0;      // s
  double speed = 0.0;  // m/s
};

/// Ground vehicle driving a planar polyline with filleted corners at constant
/// height. Speed is piecewise linear in time between knots and held after the
/// last one.
struct WaypointSpec {
  std::vector<Vec2> points;
  bool closed = true;
  double corner_radius = 10.0;  // m
  double height = 1.5;          // m
  double start_offset = 0.0;    // arc length at t = 0, m
  std::vector<SpeedKnot> speed_profile;
  double duration = 60.0;       // s
};

/// Arc-length parametrised planar path: straight segments joined by circular
/// fillets.
class PlanarPath {
 public:
  PlanarPath(const std::vector<Vec2>& points, bool closed, double corner_radius);

  double length() const { return total_; }
  bool closed() const { return closed_; }
  Vec2 point(double s) const;
  /// Unit tangent at arc length s.
  Vec2 tangent(double s) const;

 private:
  struct Piece {
    double s0 = 0.0;
    double len = 0.0;
    bool arc = false;
    Vec2 start;         // segment start
    Vec2 dir;           // segment direction
    Vec2 center;        // arc center
    double radius = 0.0;
    double phi0 = 0.0;  // arc start angle about center
    double turn = 0.0;  // +1 CCW, -1 CW
  };
  const Piece& locate(double& s) const;

  std::vector<Piece> pieces_;
  double total_ = 0.0;
  bool closed_ = true;
};

/// Distance travelled by time t under the piecewise-linear speed profile.
double distance_at(const std::vector<SpeedKnot>& profile, double t);
double speed_at(const std::vector<SpeedKnot>& profile, double t);

/// Samples the waypoint trajectory on a uniform grid (t = k / rate).
std::vector<Pose> sample_trajectory(const WaypointSpec& spec, double rate);

/// Resamples explicit poses onto a uniform grid: cubic Hermite on position
/// (using the sample velocities) and linear interpolation on attitude.
std::vector<Pose> resample_poses(const std::vector<Pose>& poses, double rate);

/// Arc length of the truth path between t_start and t_end (inclusive).
double arc_length(std::span<const Pose> poses, double t_start, double t_end);

}  // namespace mpnav::scene
