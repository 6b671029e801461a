#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fuseloc/calibration.hpp"
#include "fuseloc/config.hpp"
#include "fuseloc/log_io.hpp"
#include "fuseloc/metrics.hpp"
#include "fuseloc/monte_carlo.hpp"
#include "fuseloc/scenario.hpp"

namespace fuseloc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct RunConfig {
  std::filesystem::path config;
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::vector<std::string> estimators;
  std::optional<std::size_t> runs;
};

/// Parses the estimator override, dropping repeats with a warning on `err`.
inline std::vector<Estimator> resolve_estimators(const std::vector<std::string>& names, std::ostream& err) {
  std::vector<Estimator> out;
  for (const std::string& n : names) {
    const Estimator e = parse_estimator(n);
    if (std::find(out.begin(), out.end(), e) != out.end()) {
      err << "warning: estimator '" << n << "' listed more than once; ignoring the repeat\n";
      continue;
    }
    out.push_back(e);
  }
  return out;
}

namespace detail {

inline ScenarioFile load(const RunConfig& cfg, std::ostream& err) {
  ScenarioFile file = load_scenario(cfg.config);
  if (cfg.seed) file.scenario.seed = *cfg.seed;
  if (!cfg.estimators.empty()) file.scenario.estimators = resolve_estimators(cfg.estimators, err);
  if (cfg.runs) file.calibration.n_runs = *cfg.runs;
  return file;
}

inline std::ofstream open_out(const std::filesystem::path& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  std::ofstream f(dir / name, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + (dir / name).string());
  return f;
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const InvalidArgument& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const CalibrationFailed& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace detail

/// Writes run_log.csv, summary.json and scans.csv for one seeded run.
inline int cmd_simulate(const RunConfig& cfg, std::ostream& err) {
  return detail::guarded(err, [&] {
    const ScenarioFile file = detail::load(cfg, err);
    const RunLog log = run_scenario(file.scenario);
    const RunMetrics metrics = compute_metrics(log);
    {
      std::ofstream f = detail::open_out(cfg.out_dir, "run_log.csv");
      write_run_log_csv(f, log);
    }
    {
      std::ofstream f = detail::open_out(cfg.out_dir, "summary.json");
      f << run_summary_json(log, metrics).dump(2) << '\n';
    }
    {
      std::ofstream f = detail::open_out(cfg.out_dir, "scans.csv");
      write_scan_records(f, log.scans);
    }
    for (const EstimatorMetrics& m : metrics.estimators) {
      if (m.diverged) err << "note: " << to_string(m.estimator) << " diverged; see summary.json\n";
    }
    return kExitOk;
  });
}

/// Monte Carlo comparison over `runs` consecutive seeds starting at the scenario seed.
inline int cmd_compare(const RunConfig& cfg, std::ostream& err) {
  return detail::guarded(err, [&]() -> int {
    const std::size_t runs = cfg.runs.value_or(50);
    if (runs < 2) {
      err << "usage: compare needs at least 2 seeds (--runs >= 2)\n";
      return kExitUsage;
    }
    const ScenarioFile file = detail::load(cfg, err);
    const BatchResult batch = run_batch(file.scenario, consecutive_seeds(file.scenario.seed, runs));
    {
      std::ofstream f = detail::open_out(cfg.out_dir, "compare_summary.json");
      f << batch_summary_json(batch).dump(2) << '\n';
    }
    {
      std::ofstream f = detail::open_out(cfg.out_dir, "compare_table.txt");
      write_batch_table(f, batch);
    }
    {
      std::ofstream f = detail::open_out(cfg.out_dir, "compare_runs.csv");
      f << "seed,estimator,rmse,final_position_error,final_heading_error,nees_mean,final_nees\n";
      for (std::size_t i = 0; i < batch.runs.size(); ++i) {
        for (const EstimatorMetrics& m : batch.runs[i].estimators) {
          f << batch.seeds[i] << ',' << to_string(m.estimator) << ','
            << fuseloc::detail::fmt_double(m.rmse) << ','
            << fuseloc::detail::fmt_double(m.final_position_error) << ','
            << fuseloc::detail::fmt_double(m.final_heading_error) << ','
            << fuseloc::detail::fmt_double(m.nees_mean) << ','
            << fuseloc::detail::fmt_double(m.final_nees) << '\n';
        }
      }
    }
    return kExitOk;
  });
}

/// Prints the delta estimate on `out` and writes calibration_report.json.
inline int cmd_calibrate_delta(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const ScenarioFile file = detail::load(cfg, err);
    const CalibrationResult r = calibrate_delta(file.scenario.robot, file.calibration,
                                                file.scenario.noise.speed_delta, file.scenario.seed);
    {
      std::ofstream f = detail::open_out(cfg.out_dir, "calibration_report.json");
      f << calibration_report_json(r, file.scenario.noise.speed_delta).dump(2) << '\n';
    }
    out << std::setprecision(10) << r.delta << '\n';
    return kExitOk;
  });
}

}  // namespace fuseloc::cli
