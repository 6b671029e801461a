#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fuseloc/errors.hpp"
#include "fuseloc/geometry.hpp"
#include "fuseloc/motion.hpp"

namespace fuseloc {

enum class PathKind { kStraight, kSpin, kRoundedRectangle, kRoundedTriangle, kWaypoints };

inline std::string to_string(PathKind k) {
  switch (k) {
    case PathKind::kStraight: return "straight";
    case PathKind::kSpin: return "spin";
    case PathKind::kRoundedRectangle: return "rounded_rectangle";
    case PathKind::kRoundedTriangle: return "rounded_triangle";
    case PathKind::kWaypoints: return "waypoints";
  }
  return "unknown";
}

/// Declarative description of a ground-truth path.
struct PathSpec {
  PathKind kind = PathKind::kRoundedRectangle;
  double speed = 0.22;       // m/s along the path
  double spin_rate = 0.1;    // rad/s, spin only
  Pose start;                // straight and spin only
  Vec2 center = Vec2::Zero();
  double width = 4.0;        // rounded rectangle
  double height = 3.0;
  double side = 3.0;         // rounded triangle
  double corner_radius = 0.5;
  std::vector<Vec2> waypoints;  // open polyline
  bool closed_waypoints = false;
};

/// Straight line (curvature 0) or circular arc of constant curvature.
struct PathPrimitive {
  Pose start;
  double length = 0.0;
  double curvature = 0.0;

  Pose at(double s) const {
    if (curvature == 0.0) {
      return {start.x + s * std::cos(start.theta), start.y + s * std::sin(start.theta), start.theta};
    }
    const double h = start.theta + curvature * s;
    return {start.x + (std::sin(h) - std::sin(start.theta)) / curvature,
            start.y - (std::cos(h) - std::cos(start.theta)) / curvature, wrap_angle(h)};
  }
};

/// Pose on the path and the wheel speeds that realize its velocity.
struct TruthSample {
  Pose pose;
  WheelSpeeds wheels;
  double v = 0.0;
  double omega = 0.0;
};

inline WheelSpeeds wheel_speeds_for(double v, double omega, const RobotParams& p) {
  return {(v - 0.5 * p.wheel_base * omega) / p.wheel_radius,
          (v + 0.5 * p.wheel_base * omega) / p.wheel_radius};
}

/// Continuous-time ground truth made of line and arc primitives (or a spin in place).
class Trajectory {
 public:
  static Trajectory straight(const Pose& start, double speed) {
    Trajectory t;
    t.start_ = start;
    t.speed_ = speed;
    t.unbounded_line_ = true;
    return t;
  }

  static Trajectory spin(const Pose& start, double rate) {
    Trajectory t;
    t.start_ = start;
    t.spin_rate_ = rate;
    t.spin_ = true;
    return t;
  }

  /// Polyline through `vertices` with corners filleted at `radius`. A closed path loops.
  static Trajectory rounded_polyline(const std::vector<Vec2>& vertices, double radius, double speed,
                                     bool closed) {
    const std::size_t n = vertices.size();
    if (n < 2 || (closed && n < 3)) {
      throw InvalidArgument("rounded_polyline: not enough vertices");
    }
    if (!(speed > 0.0) || !(radius >= 0.0)) {
      throw InvalidArgument("rounded_polyline: speed must be > 0 and radius >= 0");
    }
    const std::size_t edges = closed ? n : n - 1;
    std::vector<Vec2> dir(edges);
    std::vector<double> len(edges);
    for (std::size_t i = 0; i < edges; ++i) {
      const Vec2 d = vertices[(i + 1) % n] - vertices[i];
      len[i] = d.norm();
      if (len[i] == 0.0) {
        throw DegenerateInput("rounded_polyline: repeated vertex");
      }
      dir[i] = d / len[i];
    }
    // Signed turn and tangent length at each vertex; open ends have none.
    std::vector<double> turn(n, 0.0);
    std::vector<double> tangent(n, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
      if (!closed && (v == 0 || v == n - 1)) {
        continue;
      }
      const Vec2& din = dir[(v + edges - 1) % edges];
      const Vec2& dout = dir[v % edges];
      turn[v] = std::atan2(din.x() * dout.y() - din.y() * dout.x(), din.dot(dout));
      tangent[v] = radius * std::tan(0.5 * std::abs(turn[v]));
    }
    Trajectory t;
    t.speed_ = speed;
    t.closed_ = closed;
    Pose cursor{vertices[0].x() + tangent[0] * dir[0].x(), vertices[0].y() + tangent[0] * dir[0].y(),
                std::atan2(dir[0].y(), dir[0].x())};
    t.start_ = cursor;
    for (std::size_t i = 0; i < edges; ++i) {
      const std::size_t next = (i + 1) % n;
      const double straight = len[i] - tangent[i] - tangent[next];
      if (straight < -1e-12) {
        throw InvalidArgument("rounded_polyline: corner radius too large for edge length");
      }
      if (straight > 0.0) {
        PathPrimitive line{cursor, straight, 0.0};
        t.prims_.push_back(line);
        cursor = line.at(straight);
      }
      if (turn[next] != 0.0 && radius > 0.0) {
        PathPrimitive arc{cursor, radius * std::abs(turn[next]), (turn[next] > 0.0 ? 1.0 : -1.0) / radius};
        t.prims_.push_back(arc);
        cursor = arc.at(arc.length);
      } else if (turn[next] != 0.0) {
        throw InvalidArgument("rounded_polyline: sharp corners need a positive radius");
      }
    }
    for (const PathPrimitive& p : t.prims_) {
      t.total_length_ += p.length;
    }
    return t;
  }

  static Trajectory from_spec(const PathSpec& spec) {
    switch (spec.kind) {
      case PathKind::kStraight:
        return straight(spec.start, spec.speed);
      case PathKind::kSpin:
        return spin(spec.start, spec.spin_rate);
      case PathKind::kRoundedRectangle: {
        const double hx = 0.5 * spec.width;
        const double hy = 0.5 * spec.height;
        const Vec2& c = spec.center;
        return rounded_polyline({c + Vec2(-hx, -hy), c + Vec2(hx, -hy), c + Vec2(hx, hy), c + Vec2(-hx, hy)},
                                spec.corner_radius, spec.speed, true);
      }
      case PathKind::kRoundedTriangle: {
        const double circum = spec.side / std::sqrt(3.0);
        std::vector<Vec2> v;
        for (double a_deg : {-150.0, -30.0, 90.0}) {
          v.push_back(spec.center + circum * Vec2(std::cos(deg2rad(a_deg)), std::sin(deg2rad(a_deg))));
        }
        return rounded_polyline(v, spec.corner_radius, spec.speed, true);
      }
      case PathKind::kWaypoints:
        return rounded_polyline(spec.waypoints, spec.corner_radius, spec.speed, spec.closed_waypoints);
    }
    throw InvalidArgument("Trajectory: unknown path kind");
  }

  const Pose& start() const { return start_; }
  double length() const { return total_length_; }
  const std::vector<PathPrimitive>& primitives() const { return prims_; }

  /// Pose and realizing wheel speeds at time t >= 0.
  TruthSample sample(double t, const RobotParams& p) const {
    if (!(t >= 0.0) || !std::isfinite(t)) {
      throw InvalidArgument("Trajectory::sample: time must be finite and >= 0");
    }
    TruthSample out;
    if (spin_) {
      out.pose = {start_.x, start_.y, wrap_angle(start_.theta + spin_rate_ * t)};
      out.omega = spin_rate_;
    } else if (unbounded_line_) {
      out.pose = PathPrimitive{start_, 0.0, 0.0}.at(speed_ * t);
      out.v = speed_;
    } else {
      double s = speed_ * t;
      bool moving = true;
      if (closed_) {
        s = std::fmod(s, total_length_);
      } else if (s >= total_length_) {
        s = total_length_;
        moving = false;
      }
      const PathPrimitive* prim = &prims_.back();
      double local = prim->length;
      double acc = 0.0;
      for (const PathPrimitive& candidate : prims_) {
        if (s < acc + candidate.length) {
          prim = &candidate;
          local = s - acc;
          break;
        }
        acc += candidate.length;
      }
      out.pose = prim->at(local);
      if (moving) {
        out.v = speed_;
        out.omega = speed_ * prim->curvature;
      }
    }
    out.wheels = wheel_speeds_for(out.v, out.omega, p);
    return out;
  }

 private:
  Pose start_;
  std::vector<PathPrimitive> prims_;
  double total_length_ = 0.0;
  double speed_ = 0.0;
  double spin_rate_ = 0.0;
  bool spin_ = false;
  bool unbounded_line_ = false;
  bool closed_ = false;
};

}  // namespace fuseloc
