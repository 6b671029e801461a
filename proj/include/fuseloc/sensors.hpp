#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "fuseloc/errors.hpp"
#include "fuseloc/geometry.hpp"
#include "fuseloc/motion.hpp"
#include "fuseloc/random.hpp"
#include "fuseloc/scanmatch.hpp"

namespace fuseloc {

struct Bounds {
  Vec2 min = Vec2::Zero();
  Vec2 max = Vec2::Zero();

  bool contains(const Vec2& p) const {
    return p.x() >= min.x() && p.x() <= max.x() && p.y() >= min.y() && p.y() <= max.y();
  }
  double diagonal() const { return (max - min).norm(); }
};

/// Wall segments, the camera landmark and the region the robot may occupy.
struct World {
  std::vector<GlobalLine> walls;
  Vec2 landmark = Vec2::Zero();
  Bounds bounds;

  void validate() const {
    if (walls.size() < 3) {
      throw InvalidArgument("World: at least 3 walls required");
    }
    if (!bounds.contains(landmark)) {
      throw InvalidArgument("World: landmark outside bounds");
    }
  }

  /// Builds a world from wall segments; bounds are their bounding box.
  static World from_segments(const std::vector<std::pair<Vec2, Vec2>>& segments, const Vec2& landmark) {
    World w;
    w.landmark = landmark;
    w.bounds.min = Vec2::Constant(std::numeric_limits<double>::infinity());
    w.bounds.max = Vec2::Constant(-std::numeric_limits<double>::infinity());
    for (const auto& [a, b] : segments) {
      w.walls.push_back(line_through_points(a, b));
      w.bounds.min = w.bounds.min.cwiseMin(a).cwiseMin(b);
      w.bounds.max = w.bounds.max.cwiseMax(a).cwiseMax(b);
    }
    w.validate();
    return w;
  }

  /// Axis-aligned rectangular room centred on `center`.
  static World rectangular_room(double width, double height, const Vec2& landmark,
                                const Vec2& center = Vec2::Zero()) {
    const double hx = 0.5 * width;
    const double hy = 0.5 * height;
    const Vec2 a = center + Vec2(-hx, -hy);
    const Vec2 b = center + Vec2(hx, -hy);
    const Vec2 c = center + Vec2(hx, hy);
    const Vec2 d = center + Vec2(-hx, hy);
    return from_segments({{a, b}, {b, c}, {c, d}, {d, a}}, landmark);
  }

  std::vector<GlobalLine> map_lines() const { return walls; }
};

/// Unrolled panorama of the omni camera. Column 0 faces straight ahead and columns
/// increase counter-clockwise.
struct PanoramaModel {
  int width_px = 720;
  Vec2 center = Vec2(320.0, 240.0);
  double degrees_per_px = 0.5;
};

/// Ground-truth perturbation parameters for the simulated sensors.
struct SensorNoise {
  double sigma_range = 0.03;                 // m
  double sigma_compass = deg2rad(0.1);       // rad
  double compass_resolution = deg2rad(0.1);  // rad, 0 disables quantization
  double sigma_camera = deg2rad(0.2);        // rad
  bool camera_quantize = true;               // whole-pixel panorama columns
  double speed_delta = 0.01;                 // wheel-speed variance factor
  bool initial_error = true;                 // draw the filters' start pose from the prior

  void validate() const {
    if (!(sigma_range >= 0.0) || !(sigma_compass >= 0.0) || !(compass_resolution >= 0.0) ||
        !(sigma_camera >= 0.0) || !(speed_delta >= 0.0)) {
      throw InvalidArgument("SensorNoise: all parameters must be >= 0");
    }
  }

  static SensorNoise none() {
    SensorNoise n;
    n.sigma_range = 0.0;
    n.sigma_compass = 0.0;
    n.compass_resolution = 0.0;
    n.sigma_camera = 0.0;
    n.camera_quantize = false;
    n.speed_delta = 0.0;
    n.initial_error = false;
    return n;
  }
};

/// LRF geometry.
struct LrfModel {
  double angle_resolution = deg2rad(1.0);
  double min_range = 0.04;
  double max_range = 80.0;
};

namespace detail {

inline double gaussian(Rng& rng, double sigma) {
  if (sigma == 0.0) {
    return 0.0;
  }
  std::normal_distribution<double> dist(0.0, sigma);
  return dist(rng);
}

}  // namespace detail

/// Perturbs each wheel speed with independent N(0, delta * omega^2) noise.
inline WheelSpeeds sample_wheel_speeds(const WheelSpeeds& true_u, double delta, Rng& rng) {
  if (!(delta >= 0.0)) {
    throw InvalidArgument("sample_wheel_speeds: delta must be >= 0");
  }
  const double sd_l = std::sqrt(delta) * std::abs(true_u.omega_l);
  const double sd_r = std::sqrt(delta) * std::abs(true_u.omega_r);
  WheelSpeeds out;
  out.omega_l = true_u.omega_l + detail::gaussian(rng, sd_l);
  out.omega_r = true_u.omega_r + detail::gaussian(rng, sd_r);
  return out;
}

/// Compass heading: Gaussian noise, then quantization to `resolution`.
inline double read_compass(double true_theta, double sigma, Rng& rng,
                           double resolution = deg2rad(0.1)) {
  if (!(sigma >= 0.0) || !(resolution >= 0.0)) {
    throw InvalidArgument("read_compass: sigma and resolution must be >= 0");
  }
  double heading = wrap_angle(true_theta + detail::gaussian(rng, sigma));
  if (resolution > 0.0) {
    heading = wrap_angle(std::round(heading / resolution) * resolution);
  }
  return heading;
}

/// Panorama column -> bearing in degrees.
inline double pixel_to_bearing(double x_p, const PanoramaModel& pm = {}) {
  if (!std::isfinite(x_p) || x_p < 0.0 || x_p > static_cast<double>(pm.width_px)) {
    throw InvalidArgument("pixel_to_bearing: column outside the panorama");
  }
  return x_p * pm.degrees_per_px;
}

/// Bearing in degrees -> panorama column in [0, width_px).
inline double bearing_to_pixel(double bearing_deg, const PanoramaModel& pm = {}) {
  double deg = std::fmod(bearing_deg, 360.0);
  if (deg < 0.0) {
    deg += 360.0;
  }
  double col = deg / pm.degrees_per_px;
  if (col >= pm.width_px) {
    col -= pm.width_px;
  }
  return col;
}

/// Nearest hit distance along a ray against one wall segment, if any.
inline std::optional<double> intersect_segment(const Vec2& origin, const Vec2& dir,
                                               const GlobalLine& wall) {
  constexpr double kEndpointSlack = 1e-12;
  const Vec2 e = wall.p2 - wall.p1;
  const double denom = dir.x() * e.y() - dir.y() * e.x();
  if (denom == 0.0) {
    return std::nullopt;
  }
  const Vec2 w = wall.p1 - origin;
  const double t = (w.x() * e.y() - w.y() * e.x()) / denom;
  const double s = (w.x() * dir.y() - w.y() * dir.x()) / denom;
  if (t <= 0.0 || s < -kEndpointSlack || s > 1.0 + kEndpointSlack) {
    return std::nullopt;
  }
  return t;
}

/// Distance to the first wall along a ray, or nullopt when nothing is hit.
inline std::optional<double> cast_ray(const Vec2& origin, double heading, const World& world) {
  const Vec2 dir(std::cos(heading), std::sin(heading));
  std::optional<double> best;
  for (const GlobalLine& wall : world.walls) {
    const auto t = intersect_segment(origin, dir, wall);
    if (t && (!best || *t < *best)) {
      best = t;
    }
  }
  return best;
}

/// True when no wall crosses the open segment between `a` and `b`.
inline bool line_of_sight(const Vec2& a, const Vec2& b, const World& world) {
  const Vec2 d = b - a;
  const double len = d.norm();
  if (len == 0.0) {
    return true;
  }
  const auto hit = cast_ray(a, std::atan2(d.y(), d.x()), world);
  return !hit || *hit >= len * (1.0 - 1e-12);
}

/// Absolute heading from the landmark bearing seen in the panorama, or nullopt when
/// a wall hides the landmark.
inline std::optional<double> read_camera_orientation(const Pose& true_pose, const World& world,
                                                     const PanoramaModel& pm, double sigma, Rng& rng,
                                                     bool quantize = true) {
  if (!(sigma >= 0.0)) {
    throw InvalidArgument("read_camera_orientation: sigma must be >= 0");
  }
  const Vec2 pos = true_pose.position();
  if (!line_of_sight(pos, world.landmark, world)) {
    return std::nullopt;
  }
  const Vec2 d = world.landmark - pos;
  const double direction = std::atan2(d.y(), d.x());
  const double bearing = wrap_angle(direction - true_pose.theta);

  double col = bearing_to_pixel(rad2deg(bearing), pm);
  if (quantize) {
    col = std::round(col);
  }
  col += detail::gaussian(rng, rad2deg(sigma) / pm.degrees_per_px);
  col = std::fmod(col, static_cast<double>(pm.width_px));
  if (col < 0.0) {
    col += pm.width_px;
  }
  const double measured_bearing = deg2rad(pixel_to_bearing(col, pm));
  return wrap_angle(direction - measured_bearing);
}

/// Simulated LRF sweep from the true pose. Beams without a hit inside max_range carry
/// kNoReturn; hits get Gaussian range noise and are clamped to the sensor limits.
inline Scan cast_scan(const Pose& true_pose, const World& world, const SensorNoise& noise, Rng& rng,
                      const LrfModel& lrf = {}) {
  if (!world.bounds.contains(true_pose.position())) {
    throw InvalidArgument("cast_scan: pose outside world bounds");
  }
  Scan scan;
  scan.angle_resolution = lrf.angle_resolution;
  scan.min_range = lrf.min_range;
  scan.max_range = lrf.max_range;
  scan.pose_hint.mean = true_pose;
  const std::size_t n = Scan::beam_count(lrf.angle_resolution);
  scan.ranges.resize(n, kNoReturn);
  for (std::size_t i = 0; i < n; ++i) {
    const auto hit = cast_ray(true_pose.position(), true_pose.theta + scan.bearing_of(i), world);
    if (!hit || *hit > lrf.max_range) {
      continue;
    }
    const double d = *hit + detail::gaussian(rng, noise.sigma_range);
    scan.ranges[i] = std::clamp(d, lrf.min_range, lrf.max_range);
  }
  return scan;
}

}  // namespace fuseloc
