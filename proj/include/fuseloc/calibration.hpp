#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fuseloc/ekf.hpp"
#include "fuseloc/errors.hpp"
#include "fuseloc/motion.hpp"
#include "fuseloc/random.hpp"
#include "fuseloc/sensors.hpp"

namespace fuseloc {

/// Straight-drive and spin-in-place runs used to estimate the wheel-speed noise factor.
struct CalibrationConfig {
  std::vector<double> wheel_speeds{1.0, 2.0, 3.0, 4.0, 5.0, 6.0};  // rad/s, min to max
  double run_duration = 10.0;                                        // s
  std::size_t n_runs = 100;
};

enum class CalibrationMotion { kStraight, kSpin };

inline std::string to_string(CalibrationMotion m) {
  return m == CalibrationMotion::kStraight ? "straight" : "spin";
}

/// Aggregate for one (motion, wheel speed) cell.
struct CalibrationEntry {
  CalibrationMotion motion = CalibrationMotion::kStraight;
  double wheel_speed = 0.0;
  std::size_t runs = 0;
  double mean_sq_deviation = 0.0;  // m^2 (straight) or rad^2 (spin)
  double unit_variance = 0.0;      // predicted deviation variance for delta = 1
  double delta_estimate = 0.0;     // mean_sq_deviation / unit_variance
};

struct CalibrationResult {
  double delta = 0.0;
  std::vector<CalibrationEntry> entries;
  std::size_t runs = 0;
};

/// Estimates delta by driving simulated straight and spin runs, comparing the noisy
/// odometry endpoint with ground truth, and matching the squared deviation to the
/// covariance the motion model predicts per unit delta. Straight runs compare
/// position (trace of the xy block), spin runs compare heading.
///
/// Each run yields deviation^2 / unit_variance, an estimate of delta to first order;
/// the result is their average.
inline CalibrationResult calibrate_delta(const RobotParams& robot, const CalibrationConfig& cfg,
                                         double true_delta_sim, std::uint64_t seed) {
  robot.validate();
  if (cfg.n_runs < 10) {
    throw InvalidArgument("calibrate_delta: n_runs must be >= 10");
  }
  if (cfg.wheel_speeds.empty() || !(cfg.run_duration > 0.0)) {
    throw InvalidArgument("calibrate_delta: need wheel speeds and a positive run duration");
  }
  if (!(true_delta_sim >= 0.0)) {
    throw InvalidArgument("calibrate_delta: simulated delta must be >= 0");
  }
  const std::size_t ticks = static_cast<std::size_t>(std::llround(cfg.run_duration / robot.dt));
  const std::size_t n_speeds = cfg.wheel_speeds.size();

  CalibrationResult result;
  result.runs = cfg.n_runs;
  for (CalibrationMotion m : {CalibrationMotion::kStraight, CalibrationMotion::kSpin}) {
    for (double w : cfg.wheel_speeds) {
      result.entries.push_back({m, w, 0, 0.0, 0.0, 0.0});
    }
  }

  Rng rng = make_rng(seed, Stream::kCalibration);
  double ratio_sum = 0.0;
  std::size_t informative = 0;
  for (std::size_t run = 0; run < cfg.n_runs; ++run) {
    const std::size_t cell = run % (2 * n_speeds);
    CalibrationEntry& entry = result.entries[cell];
    const double w = entry.wheel_speed;
    const WheelSpeeds commanded = entry.motion == CalibrationMotion::kStraight
                                      ? WheelSpeeds{w, w}
                                      : WheelSpeeds{-w, w};

    Pose truth;
    PoseEstimate odo;
    for (std::size_t k = 0; k < ticks; ++k) {
      truth = propagate_pose(truth, odometry_delta(commanded, robot));
      const WheelSpeeds measured = sample_wheel_speeds(commanded, true_delta_sim, rng);
      odo.mean = propagate_pose(odo.mean, odometry_delta(measured, robot));
    }
    // Unit-delta covariance along the nominal run.
    PoseEstimate unit;
    for (std::size_t k = 0; k < ticks; ++k) {
      unit = predict(unit, commanded, robot, NoiseModel{1.0});
    }

    double dev2 = 0.0;
    double var1 = 0.0;
    if (entry.motion == CalibrationMotion::kStraight) {
      dev2 = (odo.mean.position() - truth.position()).squaredNorm();
      var1 = unit.cov(0, 0) + unit.cov(1, 1);
    } else {
      const double e = wrap_angle(odo.mean.theta - truth.theta);
      dev2 = e * e;
      var1 = unit.cov(2, 2);
    }
    ++entry.runs;
    entry.mean_sq_deviation += dev2;
    entry.unit_variance = var1;
    if (var1 > 0.0) {
      ratio_sum += dev2 / var1;
      ++informative;
    }
  }
  if (informative == 0) {
    throw CalibrationFailed("calibrate_delta: runs carry no information (all wheel speeds zero)");
  }
  for (CalibrationEntry& e : result.entries) {
    if (e.runs > 0) {
      e.mean_sq_deviation /= static_cast<double>(e.runs);
      e.delta_estimate = e.unit_variance > 0.0 ? e.mean_sq_deviation / e.unit_variance : 0.0;
    }
  }
  result.delta = ratio_sum / static_cast<double>(informative);
  return result;
}

}  // namespace fuseloc
