#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "fuseloc/calibration.hpp"
#include "fuseloc/errors.hpp"
#include "fuseloc/scenario.hpp"

namespace fuseloc {

/// Everything a scenario file can configure.
struct ScenarioFile {
  Scenario scenario;
  CalibrationConfig calibration;
};

namespace detail {

template <typename T>
void read_if(const YAML::Node& node, const char* key, T& out) {
  if (const YAML::Node v = node[key]) {
    try {
      out = v.as<T>();
    } catch (const YAML::Exception& ex) {
      throw ConfigError(std::string("bad value for '") + key + "': " + ex.what());
    }
  }
}

inline void read_deg_if(const YAML::Node& node, const char* key, double& out_rad) {
  double deg = 0.0;
  if (node[key]) {
    read_if(node, key, deg);
    out_rad = deg2rad(deg);
  }
}

/// Variance given either directly or as a standard deviation in degrees.
inline void read_angle_variance(const YAML::Node& node, const char* var_key, const char* sigma_deg_key,
                                double& out) {
  if (node[var_key] && node[sigma_deg_key]) {
    throw ConfigError(std::string("give either '") + var_key + "' or '" + sigma_deg_key + "', not both");
  }
  read_if(node, var_key, out);
  if (node[sigma_deg_key]) {
    double sigma = 0.0;
    read_if(node, sigma_deg_key, sigma);
    out = deg2rad(sigma) * deg2rad(sigma);
  }
}

inline Vec2 read_point(const YAML::Node& node, const char* what) {
  if (!node.IsSequence() || node.size() != 2) {
    throw ConfigError(std::string(what) + ": expected [x, y]");
  }
  return {node[0].as<double>(), node[1].as<double>()};
}

inline World read_world(const YAML::Node& node) {
  Vec2 landmark(2.8, 2.3);
  if (node["landmark"]) {
    landmark = read_point(node["landmark"], "world.landmark");
  }
  if (node["walls"]) {
    std::vector<std::pair<Vec2, Vec2>> segments;
    for (const YAML::Node& w : node["walls"]) {
      if (!w.IsSequence() || w.size() != 4) {
        throw ConfigError("world.walls: each wall is [x1, y1, x2, y2]");
      }
      segments.emplace_back(Vec2(w[0].as<double>(), w[1].as<double>()),
                            Vec2(w[2].as<double>(), w[3].as<double>()));
    }
    return World::from_segments(segments, landmark);
  }
  double width = 6.0, height = 5.0;
  Vec2 center = Vec2::Zero();
  if (const YAML::Node room = node["room"]) {
    read_if(room, "width", width);
    read_if(room, "height", height);
    if (room["center"]) center = read_point(room["center"], "world.room.center");
  }
  return World::rectangular_room(width, height, landmark, center);
}

inline PathKind parse_path_kind(const std::string& s) {
  for (PathKind k : {PathKind::kStraight, PathKind::kSpin, PathKind::kRoundedRectangle,
                     PathKind::kRoundedTriangle, PathKind::kWaypoints}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown path type '" + s + "'");
}

inline PathSpec read_path(const YAML::Node& node) {
  PathSpec p;
  std::string type = to_string(p.kind);
  read_if(node, "type", type);
  p.kind = parse_path_kind(type);
  read_if(node, "speed", p.speed);
  read_if(node, "spin_rate", p.spin_rate);
  read_if(node, "width", p.width);
  read_if(node, "height", p.height);
  read_if(node, "side", p.side);
  read_if(node, "corner_radius", p.corner_radius);
  read_if(node, "closed", p.closed_waypoints);
  if (node["center"]) p.center = read_point(node["center"], "path.center");
  if (const YAML::Node s = node["start"]) {
    if (!s.IsSequence() || s.size() != 3) throw ConfigError("path.start: expected [x, y, theta]");
    p.start = {s[0].as<double>(), s[1].as<double>(), wrap_angle(s[2].as<double>())};
  }
  if (const YAML::Node w = node["waypoints"]) {
    for (const YAML::Node& pt : w) p.waypoints.push_back(read_point(pt, "path.waypoints"));
  }
  return p;
}

}  // namespace detail

/// Parses a scenario document. Unset keys keep their defaults.
inline ScenarioFile parse_scenario(const YAML::Node& root) {
  using detail::read_if;
  ScenarioFile file;
  Scenario& sc = file.scenario;
  try {
    if (const YAML::Node n = root["robot"]) {
      read_if(n, "wheel_radius", sc.robot.wheel_radius);
      read_if(n, "wheel_base", sc.robot.wheel_base);
      read_if(n, "dt", sc.robot.dt);
    }
    if (const YAML::Node n = root["world"]) sc.world = detail::read_world(n);
    if (const YAML::Node n = root["path"]) sc.path = detail::read_path(n);
    read_if(root, "duration", sc.duration);
    read_if(root, "seed", sc.seed);

    if (const YAML::Node n = root["noise"]) {
      read_if(n, "speed_delta", sc.noise.speed_delta);
      read_if(n, "range_sigma", sc.noise.sigma_range);
      detail::read_deg_if(n, "compass_sigma_deg", sc.noise.sigma_compass);
      detail::read_deg_if(n, "compass_resolution_deg", sc.noise.compass_resolution);
      detail::read_deg_if(n, "camera_sigma_deg", sc.noise.sigma_camera);
      read_if(n, "camera_quantize", sc.noise.camera_quantize);
      read_if(n, "initial_error", sc.noise.initial_error);
    }
    sc.filter_noise.delta = sc.noise.speed_delta;

    if (const YAML::Node n = root["filter"]) {
      read_if(n, "delta", sc.filter_noise.delta);
      std::string preset;
      read_if(n, "compass_preset", preset);
      if (preset == "raw") {
        sc.variances.var_phi = SensorVariances::raw_compass_preset().var_phi;
      } else if (!preset.empty() && preset != "radians") {
        throw ConfigError("filter.compass_preset must be 'radians' or 'raw'");
      }
      read_if(n, "var_r", sc.variances.var_r);
      if (n["range_sigma"]) {
        double s = 0.0;
        read_if(n, "range_sigma", s);
        sc.variances.var_r = s * s;
      }
      detail::read_angle_variance(n, "var_psi", "line_angle_sigma_deg", sc.variances.var_psi);
      detail::read_angle_variance(n, "var_phi", "compass_sigma_deg", sc.variances.var_phi);
      detail::read_angle_variance(n, "var_gamma", "camera_sigma_deg", sc.variances.var_gamma);
      read_if(n, "use_line_fit_covariance", sc.variances.use_line_fit_covariance);
      std::string q_speeds;
      read_if(n, "q_speeds", q_speeds);
      if (q_speeds == "measured") {
        sc.q_from_commanded = false;
      } else if (!q_speeds.empty() && q_speeds != "commanded") {
        throw ConfigError("filter.q_speeds must be 'commanded' or 'measured'");
      }
      if (const YAML::Node s = n["initial_sigma"]) {
        if (!s.IsSequence() || s.size() != 3) {
          throw ConfigError("filter.initial_sigma: expected [sx, sy, s_theta_deg]");
        }
        sc.initial_sigma = Vec3(s[0].as<double>(), s[1].as<double>(), deg2rad(s[2].as<double>()));
      }
    }

    if (const YAML::Node n = root["rates"]) {
      read_if(n, "compass", sc.rates.compass);
      read_if(n, "camera", sc.rates.camera);
      read_if(n, "lrf", sc.rates.lrf);
    }
    if (const YAML::Node n = root["lrf"]) {
      detail::read_deg_if(n, "resolution_deg", sc.lrf.angle_resolution);
      read_if(n, "min_range", sc.lrf.min_range);
      read_if(n, "max_range", sc.lrf.max_range);
    }
    if (const YAML::Node n = root["camera"]) {
      read_if(n, "width_px", sc.panorama.width_px);
      sc.panorama.degrees_per_px = 360.0 / sc.panorama.width_px;
    }
    // The extractor weights beams by the LRF's rated range accuracy.
    sc.extraction.var_r = sc.variances.var_r;
    if (const YAML::Node n = root["extraction"]) {
      read_if(n, "min_points", sc.extraction.min_points);
      read_if(n, "split_threshold", sc.extraction.split_threshold);
      read_if(n, "split_sigma_factor", sc.extraction.split_sigma_factor);
      detail::read_deg_if(n, "merge_psi_deg", sc.extraction.merge_psi);
      read_if(n, "merge_r", sc.extraction.merge_r);
      read_if(n, "max_gap", sc.extraction.max_gap);
      read_if(n, "var_r", sc.extraction.var_r);
    }
    if (const YAML::Node n = root["matching"]) {
      read_if(n, "gate_r", sc.gate.gate_r);
      read_if(n, "gate_psi", sc.gate.gate_psi);
      read_if(n, "mahalanobis", sc.gate.use_mahalanobis);
      read_if(n, "mahalanobis_gate", sc.gate.mahalanobis_gate);
    }
    sc.gate.var_r = sc.variances.var_r;
    sc.gate.var_psi = sc.variances.var_psi;

    if (const YAML::Node n = root["map_source"]) {
      const std::string s = n.as<std::string>();
      if (s == "world") sc.map_source = MapSource::kWorld;
      else if (s == "first_scan") sc.map_source = MapSource::kFirstScan;
      else throw ConfigError("map_source must be 'world' or 'first_scan'");
    }
    if (const YAML::Node n = root["estimators"]) {
      sc.estimators.clear();
      for (const YAML::Node& e : n) sc.estimators.push_back(parse_estimator(e.as<std::string>()));
    }
    if (const YAML::Node n = root["calibration"]) {
      if (n["wheel_speeds"]) {
        file.calibration.wheel_speeds = n["wheel_speeds"].as<std::vector<double>>();
      }
      read_if(n, "run_duration", file.calibration.run_duration);
      read_if(n, "runs", file.calibration.n_runs);
    }
  } catch (const YAML::Exception& ex) {
    throw ConfigError(std::string("scenario: ") + ex.what());
  } catch (const InvalidArgument& ex) {
    throw ConfigError(std::string("scenario: ") + ex.what());
  } catch (const DegenerateInput& ex) {
    throw ConfigError(std::string("scenario: ") + ex.what());
  }
  return file;
}

inline ScenarioFile load_scenario(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError("scenario file not found: " + path.string());
  }
  try {
    return parse_scenario(YAML::LoadFile(path.string()));
  } catch (const YAML::Exception& ex) {
    throw ConfigError(path.string() + ": " + ex.what());
  }
}

inline ScenarioFile parse_scenario_text(const std::string& text) {
  try {
    return parse_scenario(YAML::Load(text));
  } catch (const YAML::Exception& ex) {
    throw ConfigError(std::string("scenario: ") + ex.what());
  }
}

}  // namespace fuseloc
