#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "fuseloc/ekf.hpp"
#include "fuseloc/errors.hpp"
#include "fuseloc/scenario.hpp"

namespace fuseloc {

struct EstimatorMetrics {
  Estimator estimator = Estimator::kOdometry;
  std::vector<double> dev_x;  // estimate - truth, per tick
  std::vector<double> dev_y;
  std::vector<double> nees;   // NaN where the covariance is singular
  double rmse = 0.0;          // position RMSE over all ticks
  double final_position_error = 0.0;
  double final_heading_error = 0.0;  // |wrapped|, rad
  double max_position_error = 0.0;
  double nees_mean = 0.0;     // over ticks >= 1 with finite NEES
  double final_nees = 0.0;
  bool diverged = false;
};

struct RunMetrics {
  std::vector<EstimatorMetrics> estimators;

  const EstimatorMetrics& of(Estimator e) const {
    for (const EstimatorMetrics& m : estimators) {
      if (m.estimator == e) return m;
    }
    throw InvalidArgument("RunMetrics: estimator not present");
  }
};

inline RunMetrics compute_metrics(const RunLog& log) {
  if (log.ticks.empty()) {
    throw InvalidArgument("compute_metrics: empty log");
  }
  RunMetrics out;
  for (std::size_t i = 0; i < log.estimators.size(); ++i) {
    EstimatorMetrics m;
    m.estimator = log.estimators[i];
    double sq_sum = 0.0;
    double nees_sum = 0.0;
    std::size_t nees_n = 0;
    for (const TickRecord& tick : log.ticks) {
      const EstimatorRecord& rec = tick.estimates.at(i);
      const double dx = rec.estimate.mean.x - tick.truth.x;
      const double dy = rec.estimate.mean.y - tick.truth.y;
      m.dev_x.push_back(dx);
      m.dev_y.push_back(dy);
      const double e2 = dx * dx + dy * dy;
      sq_sum += e2;
      m.max_position_error = std::max(m.max_position_error, std::sqrt(e2));
      const double n = nees(tick.truth, rec.estimate);
      m.nees.push_back(n);
      if (tick.index > 0 && std::isfinite(n)) {
        nees_sum += n;
        ++nees_n;
      }
      m.diverged = m.diverged || rec.diverged;
    }
    const TickRecord& last = log.ticks.back();
    const EstimatorRecord& fin = last.estimates.at(i);
    m.rmse = std::sqrt(sq_sum / static_cast<double>(log.ticks.size()));
    m.final_position_error = (fin.estimate.mean.position() - last.truth.position()).norm();
    m.final_heading_error = std::abs(wrap_angle(fin.estimate.mean.theta - last.truth.theta));
    m.nees_mean = nees_n > 0 ? nees_sum / static_cast<double>(nees_n) : std::nan("");
    m.final_nees = m.nees.back();
    out.estimators.push_back(std::move(m));
  }
  return out;
}

/// Two-sided acceptance interval for the average NEES of `runs` independent runs of a
/// `dof`-dimensional state: runs * mean ~ chi-square(runs * dof).
struct NeesInterval {
  double lower = 0.0;
  double upper = 0.0;
  bool contains(double v) const { return v >= lower && v <= upper; }
};

inline NeesInterval nees_interval(std::size_t runs, int dof = 3, double confidence = 0.95) {
  if (runs == 0 || dof <= 0 || !(confidence > 0.0 && confidence < 1.0)) {
    throw InvalidArgument("nees_interval: need runs > 0, dof > 0, confidence in (0, 1)");
  }
  const double k = static_cast<double>(runs) * dof;
  const boost::math::chi_squared dist(k);
  const double tail = 0.5 * (1.0 - confidence);
  return {boost::math::quantile(dist, tail) / static_cast<double>(runs),
          boost::math::quantile(dist, 1.0 - tail) / static_cast<double>(runs)};
}

/// Linear-interpolated quantile of unsorted data, q in [0, 1].
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) {
    return std::nan("");
  }
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

}  // namespace fuseloc
