#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fuseloc/calibration.hpp"
#include "fuseloc/errors.hpp"
#include "fuseloc/metrics.hpp"
#include "fuseloc/monte_carlo.hpp"
#include "fuseloc/scenario.hpp"

namespace fuseloc {

namespace detail {

/// Shortest-exact decimal for doubles (17 significant digits round-trip).
inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw ConfigError("log: bad number '" + s + "'");
  return v;
}

inline nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace detail

/// Per-tick log columns. Covariance entries are the upper triangle of P.
inline const std::vector<std::string>& estimator_columns() {
  static const std::vector<std::string> cols = {"x",   "y",   "theta", "pxx",   "pyy",     "ptt",
                                                "pxy", "pxt", "pyt",   "lines", "diverged"};
  return cols;
}

/// Writes the run as CSV: one header row, then one row per tick.
inline void write_run_log_csv(std::ostream& out, const RunLog& log) {
  out << "tick,time,truth_x,truth_y,truth_theta,cmd_omega_l,cmd_omega_r,meas_omega_l,meas_omega_r,"
         "compass,camera,scan,lines_extracted";
  for (Estimator e : log.estimators) {
    for (const std::string& c : estimator_columns()) out << ',' << to_string(e) << '_' << c;
  }
  out << '\n';
  using detail::fmt_double;
  for (const TickRecord& t : log.ticks) {
    out << t.index << ',' << fmt_double(t.time) << ',' << fmt_double(t.truth.x) << ','
        << fmt_double(t.truth.y) << ',' << fmt_double(t.truth.theta) << ','
        << fmt_double(t.commanded.omega_l) << ',' << fmt_double(t.commanded.omega_r) << ','
        << fmt_double(t.measured.omega_l) << ',' << fmt_double(t.measured.omega_r) << ','
        << (t.compass ? fmt_double(*t.compass) : "") << ',' << (t.camera ? fmt_double(*t.camera) : "")
        << ',' << (t.scan ? 1 : 0) << ',' << t.lines_extracted;
    for (const EstimatorRecord& r : t.estimates) {
      const Mat3& p = r.estimate.cov;
      out << ',' << fmt_double(r.estimate.mean.x) << ',' << fmt_double(r.estimate.mean.y) << ','
          << fmt_double(r.estimate.mean.theta) << ',' << fmt_double(p(0, 0)) << ','
          << fmt_double(p(1, 1)) << ',' << fmt_double(p(2, 2)) << ',' << fmt_double(p(0, 1)) << ','
          << fmt_double(p(0, 2)) << ',' << fmt_double(p(1, 2)) << ',' << r.lines_matched << ','
          << (r.diverged ? 1 : 0);
    }
    out << '\n';
  }
}

/// Reads a CSV written by write_run_log_csv back into a RunLog (scans and events are
/// not part of the per-tick log).
inline RunLog read_run_log_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("log: empty file");
  const std::vector<std::string> header = detail::split_csv(line);
  constexpr std::size_t kFixed = 13;
  const std::size_t per = estimator_columns().size();
  if (header.size() < kFixed || (header.size() - kFixed) % per != 0) {
    throw ConfigError("log: unexpected header");
  }
  RunLog log;
  for (std::size_t c = kFixed; c < header.size(); c += per) {
    const std::string& name = header[c];
    log.estimators.push_back(parse_estimator(name.substr(0, name.size() - 2)));
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = detail::split_csv(line);
    if (f.size() != header.size()) throw ConfigError("log: row width differs from header");
    using detail::parse_double;
    TickRecord t;
    t.index = std::stoul(f[0]);
    t.time = parse_double(f[1]);
    t.truth = {parse_double(f[2]), parse_double(f[3]), parse_double(f[4])};
    t.commanded = {parse_double(f[5]), parse_double(f[6])};
    t.measured = {parse_double(f[7]), parse_double(f[8])};
    if (!f[9].empty()) t.compass = parse_double(f[9]);
    if (!f[10].empty()) t.camera = parse_double(f[10]);
    t.scan = f[11] == "1";
    t.lines_extracted = std::stoul(f[12]);
    for (std::size_t c = kFixed; c < f.size(); c += per) {
      EstimatorRecord r;
      r.estimate.mean = {parse_double(f[c]), parse_double(f[c + 1]), parse_double(f[c + 2])};
      Mat3& p = r.estimate.cov;
      p(0, 0) = parse_double(f[c + 3]);
      p(1, 1) = parse_double(f[c + 4]);
      p(2, 2) = parse_double(f[c + 5]);
      p(0, 1) = p(1, 0) = parse_double(f[c + 6]);
      p(0, 2) = p(2, 0) = parse_double(f[c + 7]);
      p(1, 2) = p(2, 1) = parse_double(f[c + 8]);
      r.lines_matched = std::stoul(f[c + 9]);
      r.diverged = f[c + 10] == "1";
      t.estimates.push_back(r);
    }
    log.ticks.push_back(std::move(t));
  }
  if (log.ticks.size() > 1) log.dt = log.ticks[1].time - log.ticks[0].time;
  return log;
}

inline nlohmann::json metrics_to_json(const EstimatorMetrics& m) {
  using detail::number_or_null;
  return {{"name", std::string(to_string(m.estimator))},
          {"rmse", m.rmse},
          {"final_position_error", m.final_position_error},
          {"final_heading_error", m.final_heading_error},
          {"max_position_error", m.max_position_error},
          {"nees_mean", number_or_null(m.nees_mean)},
          {"final_nees", number_or_null(m.final_nees)},
          {"diverged", m.diverged}};
}

/// Summary document for one simulated run.
inline nlohmann::json run_summary_json(const RunLog& log, const RunMetrics& metrics) {
  nlohmann::json j;
  j["seed"] = log.seed;
  j["ticks"] = log.ticks.size();
  j["dt"] = log.dt;
  j["estimators"] = nlohmann::json::array();
  for (const EstimatorMetrics& m : metrics.estimators) j["estimators"].push_back(metrics_to_json(m));
  j["events"] = log.events;
  return j;
}

/// One scan per row: timestamp, pose hint (x, y, theta), then every range; kNoReturn
/// marks beams without an echo.
inline void write_scan_records(std::ostream& out, const std::vector<Scan>& scans) {
  if (scans.empty()) return;
  out << "timestamp,hint_x,hint_y,hint_theta";
  for (std::size_t i = 0; i < scans.front().ranges.size(); ++i) out << ",d" << i;
  out << '\n';
  using detail::fmt_double;
  for (const Scan& s : scans) {
    out << fmt_double(s.timestamp) << ',' << fmt_double(s.pose_hint.mean.x) << ','
        << fmt_double(s.pose_hint.mean.y) << ',' << fmt_double(s.pose_hint.mean.theta);
    for (double d : s.ranges) out << ',' << fmt_double(d);
    out << '\n';
  }
}

inline std::vector<Scan> read_scan_records(std::istream& in, const LrfModel& lrf = {}) {
  std::vector<Scan> scans;
  std::string line;
  if (!std::getline(in, line)) return scans;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = detail::split_csv(line);
    if (f.size() < 5) throw ConfigError("scan record: too few fields");
    Scan s;
    s.angle_resolution = lrf.angle_resolution;
    s.min_range = lrf.min_range;
    s.max_range = lrf.max_range;
    s.timestamp = detail::parse_double(f[0]);
    s.pose_hint.mean = {detail::parse_double(f[1]), detail::parse_double(f[2]), detail::parse_double(f[3])};
    for (std::size_t i = 4; i < f.size(); ++i) s.ranges.push_back(detail::parse_double(f[i]));
    s.validate();
    scans.push_back(std::move(s));
  }
  return scans;
}

inline nlohmann::json batch_summary_json(const BatchResult& batch) {
  nlohmann::json j;
  j["runs"] = batch.seeds.size();
  j["seeds"] = batch.seeds;
  j["nees_interval"] = {batch.interval.lower, batch.interval.upper};
  j["estimators"] = nlohmann::json::array();
  for (const EstimatorSummary& s : batch.summary) {
    j["estimators"].push_back({{"name", std::string(to_string(s.estimator))},
                               {"median_final_error", s.median_final_error},
                               {"mean_final_error", s.mean_final_error},
                               {"rmse_quantiles",
                                {{"q05", s.rmse_q05},
                                 {"q25", s.rmse_q25},
                                 {"q50", s.rmse_q50},
                                 {"q75", s.rmse_q75},
                                 {"q95", s.rmse_q95}}},
                               {"mean_final_nees", detail::number_or_null(s.mean_final_nees)},
                               {"mean_nees", detail::number_or_null(s.mean_nees)},
                               {"nees_consistent", s.nees_consistent},
                               {"diverged_runs", s.diverged_runs}});
  }
  return j;
}

/// Fixed-width comparison table, one row per estimator.
inline void write_batch_table(std::ostream& out, const BatchResult& batch) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-12s %14s %14s %12s %12s %12s %10s %6s\n", "estimator",
                "median_final_m", "mean_final_m", "rmse_q05_m", "rmse_q50_m", "rmse_q95_m",
                "final_nees", "nees");
  out << buf;
  for (const EstimatorSummary& s : batch.summary) {
    std::snprintf(buf, sizeof buf, "%-12s %14.6f %14.6f %12.6f %12.6f %12.6f %10.4f %6s\n",
                  std::string(to_string(s.estimator)).c_str(), s.median_final_error,
                  s.mean_final_error, s.rmse_q05, s.rmse_q50, s.rmse_q95, s.mean_final_nees,
                  s.nees_consistent ? "pass" : "fail");
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "runs=%zu nees_interval=[%.4f, %.4f]\n", batch.seeds.size(),
                batch.interval.lower, batch.interval.upper);
  out << buf;
}

inline nlohmann::json calibration_report_json(const CalibrationResult& r, double true_delta_sim) {
  nlohmann::json j;
  j["delta_estimate"] = r.delta;
  j["simulated_delta"] = true_delta_sim;
  j["runs"] = r.runs;
  j["cells"] = nlohmann::json::array();
  for (const CalibrationEntry& e : r.entries) {
    j["cells"].push_back({{"motion", to_string(e.motion)},
                          {"wheel_speed", e.wheel_speed},
                          {"runs", e.runs},
                          {"mean_sq_deviation", e.mean_sq_deviation},
                          {"unit_variance", e.unit_variance},
                          {"delta_estimate", e.delta_estimate}});
  }
  return j;
}

}  // namespace fuseloc
