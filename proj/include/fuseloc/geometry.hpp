#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Core>

#include "fuseloc/errors.hpp"

namespace fuseloc {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Wraps an angle into the canonical interval (-pi, pi].
inline double wrap_angle(double a) {
  if (!std::isfinite(a)) {
    throw InvalidArgument("wrap_angle: non-finite angle");
  }
  // std::remainder is exact, so results already in range are returned unchanged.
  double r = std::remainder(a, kTwoPi);
  if (r <= -kPi) {
    r += kTwoPi;
  }
  return r;
}

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Vec2 position() const { return {x, y}; }
  Vec3 vector() const { return {x, y, theta}; }
  static Pose from_vector(const Vec3& v) { return {v.x(), v.y(), wrap_angle(v.z())}; }
};

/// Line in world frame, x cos(beta) + y sin(beta) = rho with rho >= 0.
/// Endpoints bound the physical wall and are only used for ray casting and visibility.
struct GlobalLine {
  double rho = 0.0;
  double beta = 0.0;
  Vec2 p1 = Vec2::Zero();
  Vec2 p2 = Vec2::Zero();

  Vec2 normal() const { return {std::cos(beta), std::sin(beta)}; }
  double signed_distance(const Vec2& p) const { return p.dot(normal()) - rho; }
};

/// Line in robot frame, x_R cos(psi) + y_R sin(psi) = r with r >= 0.
struct LocalLine {
  double r = 0.0;
  double psi = 0.0;
  Mat2 cov = Mat2::Zero();
};

/// Robot-frame parameters of a world line, together with the signed offset C.
struct LineTransform {
  double c = 0.0;
  double r = 0.0;
  double psi = 0.0;
};

inline GlobalLine line_through_points(const Vec2& p1, const Vec2& p2) {
  if (!p1.allFinite() || !p2.allFinite()) {
    throw InvalidArgument("line_through_points: non-finite point");
  }
  const Vec2 d = p2 - p1;
  const double len = d.norm();
  if (len == 0.0) {
    throw DegenerateInput("line_through_points: coincident points");
  }
  Vec2 n(-d.y() / len, d.x() / len);
  // Average both endpoints so neither is favoured when rounding rho.
  double rho = 0.5 * (n.dot(p1) + n.dot(p2));
  if (rho < 0.0) {
    n = -n;
    rho = -rho;
  }
  GlobalLine line;
  line.beta = wrap_angle(std::atan2(n.y(), n.x()));
  line.rho = rho;
  line.p1 = p1;
  line.p2 = p2;
  return line;
}

/// Expresses a world line in the robot frame at `pose`.
inline LineTransform global_line_to_local(const Pose& pose, const GlobalLine& line) {
  if (!std::isfinite(pose.x) || !std::isfinite(pose.y) || !std::isfinite(pose.theta) ||
      !std::isfinite(line.rho) || !std::isfinite(line.beta)) {
    throw InvalidArgument("global_line_to_local: non-finite input");
  }
  LineTransform out;
  out.c = line.rho - pose.x * std::cos(line.beta) - pose.y * std::sin(line.beta);
  out.r = std::abs(out.c);
  out.psi = out.c >= 0.0 ? wrap_angle(line.beta - pose.theta)
                         : wrap_angle(line.beta - pose.theta + kPi);
  return out;
}

/// Inverse of global_line_to_local: lifts a robot-frame line to the world frame.
/// Endpoints are left at zero; callers that know the support set fill them in.
inline GlobalLine local_line_to_global(const Pose& pose, double r, double psi) {
  double beta = psi + pose.theta;
  double rho = r + pose.x * std::cos(beta) + pose.y * std::sin(beta);
  if (rho < 0.0) {
    rho = -rho;
    beta += kPi;
  }
  GlobalLine line;
  line.rho = rho;
  line.beta = wrap_angle(beta);
  return line;
}

/// Robot frame -> world frame for a point.
inline Vec2 to_world(const Pose& pose, const Vec2& p_robot) {
  const double c = std::cos(pose.theta);
  const double s = std::sin(pose.theta);
  return {pose.x + c * p_robot.x() - s * p_robot.y(), pose.y + s * p_robot.x() + c * p_robot.y()};
}

/// World frame -> robot frame for a point.
inline Vec2 to_robot(const Pose& pose, const Vec2& p_world) {
  const double c = std::cos(pose.theta);
  const double s = std::sin(pose.theta);
  const double dx = p_world.x() - pose.x;
  const double dy = p_world.y() - pose.y;
  return {c * dx + s * dy, -s * dx + c * dy};
}

}  // namespace fuseloc
