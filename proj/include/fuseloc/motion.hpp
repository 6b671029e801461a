#pragma once

#include <cmath>

#include <Eigen/Core>

#include "fuseloc/errors.hpp"
#include "fuseloc/geometry.hpp"

namespace fuseloc {

using Mat32 = Eigen::Matrix<double, 3, 2>;

/// Differential-drive geometry and filter sampling period.
struct RobotParams {
  double wheel_radius = 0.05;  // m
  double wheel_base = 0.6;     // m
  double dt = 0.1;             // s

  void validate() const {
    if (!(wheel_radius > 0.0) || !(wheel_base > 0.0) || !(dt > 0.0) ||
        !std::isfinite(wheel_radius) || !std::isfinite(wheel_base) || !std::isfinite(dt)) {
      throw InvalidArgument("RobotParams: wheel_radius, wheel_base and dt must be finite and > 0");
    }
  }
};

/// Wheel angular speeds in rad/s.
struct WheelSpeeds {
  double omega_l = 0.0;
  double omega_r = 0.0;
};

struct OdometryDelta {
  double ds = 0.0;
  double dtheta = 0.0;
  double ds_l = 0.0;
  double ds_r = 0.0;
};

/// Wheel-speed noise: each wheel has independent variance delta * omega^2.
struct NoiseModel {
  double delta = 0.01;
};

inline OdometryDelta odometry_delta(const WheelSpeeds& u, const RobotParams& p) {
  if (!std::isfinite(u.omega_l) || !std::isfinite(u.omega_r)) {
    throw InvalidArgument("odometry_delta: non-finite wheel speed");
  }
  OdometryDelta d;
  d.ds_l = p.dt * p.wheel_radius * u.omega_l;
  d.ds_r = p.dt * p.wheel_radius * u.omega_r;
  d.ds = 0.5 * (d.ds_l + d.ds_r);
  d.dtheta = (d.ds_r - d.ds_l) / p.wheel_base;
  return d;
}

/// Midpoint-heading pose update.
inline Pose propagate_pose(const Pose& pose, const OdometryDelta& d) {
  const double mid = pose.theta + 0.5 * d.dtheta;
  return {pose.x + d.ds * std::cos(mid), pose.y + d.ds * std::sin(mid),
          wrap_angle(pose.theta + d.dtheta)};
}

/// d f / d (x, y, theta).
inline Mat3 jacobian_a(const Pose& pose, const OdometryDelta& d) {
  const double mid = pose.theta + 0.5 * d.dtheta;
  Mat3 a = Mat3::Identity();
  a(0, 2) = -d.ds * std::sin(mid);
  a(1, 2) = d.ds * std::cos(mid);
  return a;
}

/// d f / d (noise on omega_r, noise on omega_l), evaluated at zero noise.
/// Column order matches build_q.
inline Mat32 jacobian_w(const Pose& pose, const WheelSpeeds& u, const RobotParams& p) {
  const OdometryDelta d = odometry_delta(u, p);
  const double mid = pose.theta + 0.5 * d.dtheta;
  const double cm = std::cos(mid);
  const double sm = std::sin(mid);
  const double k = p.dt * p.wheel_radius;
  const double l = p.wheel_base;

  Mat32 w;
  w(0, 0) = k * (0.5 * cm - d.ds * sm / (2.0 * l));
  w(1, 0) = k * (0.5 * sm + d.ds * cm / (2.0 * l));
  w(2, 0) = k / l;
  w(0, 1) = k * (0.5 * cm + d.ds * sm / (2.0 * l));
  w(1, 1) = k * (0.5 * sm - d.ds * cm / (2.0 * l));
  w(2, 1) = -k / l;
  return w;
}

/// Input-noise covariance diag(delta * omega_r^2, delta * omega_l^2).
inline Mat2 build_q(const WheelSpeeds& u, const NoiseModel& nm) {
  if (!(nm.delta >= 0.0) || !std::isfinite(nm.delta)) {
    throw InvalidArgument("build_q: delta must be finite and >= 0");
  }
  Mat2 q = Mat2::Zero();
  q(0, 0) = nm.delta * u.omega_r * u.omega_r;
  q(1, 1) = nm.delta * u.omega_l * u.omega_l;
  return q;
}

}  // namespace fuseloc
