#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fuseloc/ekf.hpp"
#include "fuseloc/errors.hpp"
#include "fuseloc/geometry.hpp"
#include "fuseloc/motion.hpp"
#include "fuseloc/random.hpp"
#include "fuseloc/scanmatch.hpp"
#include "fuseloc/sensors.hpp"
#include "fuseloc/trajectory.hpp"

namespace fuseloc {

/// Fusion configurations compared by the simulator.
enum class Estimator { kOdometry, kEkfCompass, kEkfLrf, kEkfCamera, kEkfAll };

inline constexpr Estimator kAllEstimators[] = {Estimator::kOdometry, Estimator::kEkfCompass,
                                               Estimator::kEkfLrf, Estimator::kEkfCamera,
                                               Estimator::kEkfAll};

inline std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::kOdometry: return "odometry";
    case Estimator::kEkfCompass: return "ekf-compass";
    case Estimator::kEkfLrf: return "ekf-lrf";
    case Estimator::kEkfCamera: return "ekf-camera";
    case Estimator::kEkfAll: return "ekf-all";
  }
  return "unknown";
}

inline Estimator parse_estimator(std::string_view name) {
  for (Estimator e : kAllEstimators) {
    if (to_string(e) == name) {
      return e;
    }
  }
  throw ConfigError("unknown estimator '" + std::string(name) + "'");
}

inline bool uses_compass(Estimator e) { return e == Estimator::kEkfCompass || e == Estimator::kEkfAll; }
inline bool uses_camera(Estimator e) { return e == Estimator::kEkfCamera || e == Estimator::kEkfAll; }
inline bool uses_lrf(Estimator e) { return e == Estimator::kEkfLrf || e == Estimator::kEkfAll; }

/// Ticks between readings of each exteroceptive sensor; 0 disables the sensor.
struct SensorRates {
  int compass = 1;
  int camera = 5;
  int lrf = 10;
};

enum class MapSource { kWorld, kFirstScan };

struct Scenario {
  World world = World::rectangular_room(6.0, 5.0, Vec2(2.8, 2.3));
  PathSpec path;
  double duration = 60.0;
  RobotParams robot;
  SensorNoise noise;
  NoiseModel filter_noise;  // delta assumed by the filters
  // Evaluate Q at the commanded wheel speeds instead of the measured ones.
  bool q_from_commanded = true;
  SensorVariances variances = [] {
    SensorVariances v;
    v.use_line_fit_covariance = true;
    return v;
  }();
  std::vector<Estimator> estimators{std::begin(kAllEstimators), std::end(kAllEstimators)};
  std::uint64_t seed = 1;
  SensorRates rates;
  LrfModel lrf;
  PanoramaModel panorama;
  ExtractionConfig extraction;
  MatchGate gate;
  MapSource map_source = MapSource::kWorld;
  Vec3 initial_sigma = Vec3(0.01, 0.01, deg2rad(0.5));
  double min_clearance = 0.2;

  std::size_t tick_count() const {
    return static_cast<std::size_t>(std::llround(duration / robot.dt));
  }

  Trajectory trajectory() const { return Trajectory::from_spec(path); }

  void validate() const {
    if (!(duration > 0.0)) {
      throw InvalidArgument("Scenario: duration must be > 0");
    }
    if (estimators.empty()) {
      throw InvalidArgument("Scenario: no estimators selected");
    }
    robot.validate();
    noise.validate();
    variances.validate();
    world.validate();
    if (!(filter_noise.delta >= 0.0)) {
      throw InvalidArgument("Scenario: filter delta must be >= 0");
    }
    if (rates.compass < 0 || rates.camera < 0 || rates.lrf < 0) {
      throw InvalidArgument("Scenario: sensor rates must be >= 0");
    }
    const Trajectory traj = trajectory();
    const Bounds& b = world.bounds;
    const std::size_t n = tick_count();
    for (std::size_t k = 0; k <= n; ++k) {
      const Vec2 p = traj.sample(std::min(static_cast<double>(k) * robot.dt, duration), robot).pose.position();
      const double clearance = std::min({p.x() - b.min.x(), b.max.x() - p.x(), p.y() - b.min.y(),
                                         b.max.y() - p.y()});
      if (clearance < min_clearance) {
        throw InvalidArgument("Scenario: path leaves the world or comes closer than " +
                              std::to_string(min_clearance) + " m to its bounds");
      }
    }
  }
};

/// Exact pose on the scenario path at time t, and the wheel speeds realizing it.
inline TruthSample generate_truth(const Scenario& sc, double t) {
  if (!(t >= 0.0) || !(t <= sc.duration)) {
    throw InvalidArgument("generate_truth: t outside [0, duration]");
  }
  return sc.trajectory().sample(t, sc.robot);
}

struct EstimatorRecord {
  PoseEstimate estimate;
  std::size_t lines_matched = 0;
  bool corrected = false;
  bool diverged = false;
};

struct TickRecord {
  std::size_t index = 0;
  double time = 0.0;
  Pose truth;
  WheelSpeeds commanded;
  WheelSpeeds measured;
  std::optional<double> compass;
  std::optional<double> camera;
  bool scan = false;
  std::size_t lines_extracted = 0;
  std::vector<EstimatorRecord> estimates;  // parallel to RunLog::estimators
};

struct RunLog {
  std::vector<Estimator> estimators;
  std::uint64_t seed = 0;
  double dt = 0.0;
  double divergence_threshold = 0.0;
  std::vector<TickRecord> ticks;
  std::vector<Scan> scans;
  std::vector<std::string> events;
};

/// Called after every estimator update with the predicted and final estimate.
struct UpdateEvent {
  Estimator estimator;
  std::size_t tick;
  const PoseEstimate& prior;
  const PoseEstimate& posterior;
  bool corrected;
};
using UpdateObserver = std::function<void(const UpdateEvent&)>;

/// Runs every enabled estimator over one noisy realization of the scenario.
///
/// The robot moves by applying the commanded wheel speeds of each tick through the
/// same kinematic update the filters use, so a noiseless run is tracked exactly.
/// Wheel noise is drawn once per tick and the identical noisy speeds and sensor
/// readings are fed to every estimator.
inline RunLog run_scenario(const Scenario& sc, const UpdateObserver& observer = {}) {
  sc.validate();
  const Trajectory traj = sc.trajectory();
  const std::size_t n_ticks = sc.tick_count();
  const double dt = sc.robot.dt;

  Rng wheel_rng = make_rng(sc.seed, Stream::kWheels);
  Rng compass_rng = make_rng(sc.seed, Stream::kCompass);
  Rng camera_rng = make_rng(sc.seed, Stream::kCamera);
  Rng lrf_rng = make_rng(sc.seed, Stream::kLrf);

  RunLog log;
  log.estimators = sc.estimators;
  log.seed = sc.seed;
  log.dt = dt;
  log.divergence_threshold = sc.world.bounds.diagonal();
  log.ticks.reserve(n_ticks + 1);

  Pose truth = traj.start();
  PoseEstimate initial;
  initial.mean = truth;
  initial.cov = sc.initial_sigma.cwiseProduct(sc.initial_sigma).asDiagonal();
  if (sc.noise.initial_error) {
    Rng init_rng = make_rng(sc.seed, Stream::kInitial);
    initial.mean.x += detail::gaussian(init_rng, sc.initial_sigma(0));
    initial.mean.y += detail::gaussian(init_rng, sc.initial_sigma(1));
    initial.mean.theta = wrap_angle(initial.mean.theta + detail::gaussian(init_rng, sc.initial_sigma(2)));
  }

  std::vector<GlobalLine> map = sc.world.map_lines();
  if (sc.map_source == MapSource::kFirstScan) {
    Scan first = cast_scan(truth, sc.world, sc.noise, lrf_rng, sc.lrf);
    map = build_global_map(first, truth, sc.extraction);
    log.scans.push_back(std::move(first));
  }

  std::vector<LocalizationFilter> filters;
  filters.reserve(sc.estimators.size());
  for (std::size_t i = 0; i < sc.estimators.size(); ++i) {
    filters.emplace_back(initial, sc.robot, sc.filter_noise, sc.variances);
  }
  std::vector<bool> diverged(sc.estimators.size(), false);

  TickRecord first;
  first.truth = truth;
  for (const LocalizationFilter& f : filters) {
    first.estimates.push_back({f.estimate(), 0, false, false});
  }
  log.ticks.push_back(std::move(first));

  for (std::size_t k = 1; k <= n_ticks; ++k) {
    TickRecord rec;
    rec.index = k;
    rec.time = static_cast<double>(k) * dt;
    const double t_mid = std::min((static_cast<double>(k) - 0.5) * dt, sc.duration);
    rec.commanded = traj.sample(t_mid, sc.robot).wheels;
    truth = propagate_pose(truth, odometry_delta(rec.commanded, sc.robot));
    rec.truth = truth;
    rec.measured = sample_wheel_speeds(rec.commanded, sc.noise.speed_delta, wheel_rng);

    const auto due = [k](int rate) { return rate > 0 && k % static_cast<std::size_t>(rate) == 0; };
    if (due(sc.rates.compass)) {
      rec.compass = read_compass(truth.theta, sc.noise.sigma_compass, compass_rng,
                                 sc.noise.compass_resolution);
    }
    if (due(sc.rates.camera)) {
      rec.camera = read_camera_orientation(truth, sc.world, sc.panorama, sc.noise.sigma_camera,
                                           camera_rng, sc.noise.camera_quantize);
    }
    std::vector<ExtractedLine> extracted;
    if (due(sc.rates.lrf)) {
      Scan scan = cast_scan(truth, sc.world, sc.noise, lrf_rng, sc.lrf);
      scan.timestamp = rec.time;
      extracted = extract_lines(scan, sc.extraction);
      rec.scan = true;
      rec.lines_extracted = extracted.size();
      log.scans.push_back(std::move(scan));
    }

    for (std::size_t i = 0; i < filters.size(); ++i) {
      const Estimator e = sc.estimators[i];
      LocalizationFilter& filter = filters[i];
      const PoseEstimate prior =
          filter.predict(rec.measured, sc.q_from_commanded ? std::optional(rec.commanded) : std::nullopt);

      SensorReadings readings;
      if (uses_compass(e)) readings.compass = rec.compass;
      if (uses_camera(e)) readings.camera = rec.camera;
      if (uses_lrf(e) && rec.scan) {
        readings.lines = match_lines(extracted, map, prior, sc.gate).line_matches();
      }

      EstimatorRecord er;
      er.lines_matched = readings.lines.size();
      if (!readings.empty()) {
        try {
          filter.correct(readings);
          er.corrected = true;
        } catch (const IllConditionedUpdate& ex) {
          log.events.push_back("tick " + std::to_string(k) + " " + std::string(to_string(e)) +
                               ": correction skipped (" + ex.what() + ")");
        }
      }
      er.estimate = filter.estimate();
      if (observer) {
        observer(UpdateEvent{e, k, prior, er.estimate, er.corrected});
      }
      const double err = (er.estimate.mean.position() - truth.position()).norm();
      if (!diverged[i] && !(err <= log.divergence_threshold)) {
        diverged[i] = true;
        log.events.push_back("tick " + std::to_string(k) + " " + std::string(to_string(e)) +
                             ": diverged (position error " + std::to_string(err) + " m)");
      }
      er.diverged = diverged[i];
      rec.estimates.push_back(er);
    }
    log.ticks.push_back(std::move(rec));
  }
  return log;
}

}  // namespace fuseloc
