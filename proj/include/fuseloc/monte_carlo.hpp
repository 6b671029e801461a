#pragma once

#include <cstdint>
#include <vector>

#include "fuseloc/metrics.hpp"
#include "fuseloc/scenario.hpp"

namespace fuseloc {

struct EstimatorSummary {
  Estimator estimator = Estimator::kOdometry;
  double median_final_error = 0.0;
  double mean_final_error = 0.0;
  double rmse_q05 = 0.0;
  double rmse_q25 = 0.0;
  double rmse_q50 = 0.0;
  double rmse_q75 = 0.0;
  double rmse_q95 = 0.0;
  double mean_final_nees = 0.0;  // ensemble average at the last tick
  double mean_nees = 0.0;        // ensemble average of per-run time-averaged NEES
  bool nees_consistent = false;  // mean_final_nees inside the chi-square interval
  std::size_t diverged_runs = 0;
};

struct BatchResult {
  std::vector<std::uint64_t> seeds;
  std::vector<RunMetrics> runs;
  NeesInterval interval;
  std::vector<EstimatorSummary> summary;

  const EstimatorSummary& of(Estimator e) const {
    for (const EstimatorSummary& s : summary) {
      if (s.estimator == e) return s;
    }
    throw InvalidArgument("BatchResult: estimator not present");
  }
};

inline std::vector<EstimatorSummary> summarize(const std::vector<RunMetrics>& runs,
                                               const std::vector<Estimator>& estimators,
                                               const NeesInterval& interval) {
  std::vector<EstimatorSummary> out;
  for (Estimator e : estimators) {
    EstimatorSummary s;
    s.estimator = e;
    std::vector<double> finals, rmses;
    double nees_final = 0.0, nees_avg = 0.0;
    for (const RunMetrics& r : runs) {
      const EstimatorMetrics& m = r.of(e);
      finals.push_back(m.final_position_error);
      rmses.push_back(m.rmse);
      nees_final += m.final_nees;
      nees_avg += m.nees_mean;
      s.diverged_runs += m.diverged ? 1 : 0;
    }
    const double n = static_cast<double>(runs.size());
    s.median_final_error = median(finals);
    double sum = 0.0;
    for (double f : finals) sum += f;
    s.mean_final_error = sum / n;
    s.rmse_q05 = quantile(rmses, 0.05);
    s.rmse_q25 = quantile(rmses, 0.25);
    s.rmse_q50 = quantile(rmses, 0.50);
    s.rmse_q75 = quantile(rmses, 0.75);
    s.rmse_q95 = quantile(rmses, 0.95);
    s.mean_final_nees = nees_final / n;
    s.mean_nees = nees_avg / n;
    s.nees_consistent = interval.contains(s.mean_final_nees);
    out.push_back(s);
  }
  return out;
}

/// Runs `base` once per seed; runs are independent and deterministic per seed.
inline BatchResult run_batch(const Scenario& base, const std::vector<std::uint64_t>& seeds,
                             const UpdateObserver& observer = {}) {
  if (seeds.empty()) {
    throw InvalidArgument("run_batch: no seeds");
  }
  BatchResult result;
  result.seeds = seeds;
  for (std::uint64_t seed : seeds) {
    Scenario sc = base;
    sc.seed = seed;
    result.runs.push_back(compute_metrics(run_scenario(sc, observer)));
  }
  result.interval = nees_interval(seeds.size());
  result.summary = summarize(result.runs, base.estimators, result.interval);
  return result;
}

inline std::vector<std::uint64_t> consecutive_seeds(std::uint64_t first, std::size_t count) {
  std::vector<std::uint64_t> seeds(count);
  for (std::size_t i = 0; i < count; ++i) seeds[i] = first + i;
  return seeds;
}

}  // namespace fuseloc
