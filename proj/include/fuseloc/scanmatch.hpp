#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <tuple>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "fuseloc/ekf.hpp"
#include "fuseloc/errors.hpp"
#include "fuseloc/geometry.hpp"

namespace fuseloc {

/// Range value marking a beam that returned nothing.
inline constexpr double kNoReturn = -1.0;

/// One LRF sweep. Beam i is at scan angle i * angle_resolution, measured from the
/// robot's right (-y) through straight ahead (pi/2) to its left (pi).
struct Scan {
  double timestamp = 0.0;
  std::vector<double> ranges;
  double angle_resolution = deg2rad(1.0);
  PoseEstimate pose_hint;
  double min_range = 0.04;
  double max_range = 80.0;

  static bool is_return(double d) { return d >= 0.0; }

  double angle_of(std::size_t i) const { return static_cast<double>(i) * angle_resolution; }
  /// Beam direction in the robot frame (0 = straight ahead).
  double bearing_of(std::size_t i) const { return angle_of(i) - 0.5 * kPi; }

  static std::size_t beam_count(double angle_resolution) {
    return static_cast<std::size_t>(std::lround(kPi / angle_resolution)) + 1;
  }

  void validate() const {
    if (!(angle_resolution > 0.0) || !(min_range >= 0.0) || !(max_range > min_range)) {
      throw InvalidArgument("Scan: bad angular resolution or range limits");
    }
    if (ranges.size() != beam_count(angle_resolution)) {
      throw InvalidArgument("Scan: beam count does not cover 0..180 degrees");
    }
    for (double d : ranges) {
      if (!std::isfinite(d)) {
        throw InvalidArgument("Scan: non-finite range");
      }
      if (is_return(d) && (d < min_range || d > max_range)) {
        throw InvalidArgument("Scan: range outside sensor limits");
      }
    }
  }
};

struct ExtractionConfig {
  std::size_t min_points = 8;
  double split_threshold = 0.05;
  // A segment is split only when its worst fit residual exceeds
  // max(split_threshold, split_sigma_factor * sqrt(var_r)).
  double split_sigma_factor = 4.0;
  // Also split when two lines explain a segment much better than one:
  // ((sse_1 - sse_2) / 2) / (sse_2 / (n - 4)) > split_f_ratio, and the drop in the sum of
  // squares exceeds n * split_floor^2.
  double split_f_ratio = 50.0;
  double split_floor = 1e-9;
  double merge_psi = deg2rad(2.0);
  double merge_r = 0.05;
  // Consecutive points farther apart than this never share a segment.
  double max_gap = 1.0;
  double var_r = 0.03 * 0.03;
  double var_bearing = 0.0;

  double effective_split_threshold() const {
    return std::max(split_threshold, split_sigma_factor * std::sqrt(var_r));
  }
};

struct ExtractedLine {
  LocalLine local;
  std::size_t first_beam = 0;
  std::size_t last_beam = 0;
  std::size_t point_count = 0;
  double rms_residual = 0.0;
  // Support extremes projected onto the fitted line, robot frame.
  Vec2 end_a = Vec2::Zero();
  Vec2 end_b = Vec2::Zero();
};

namespace detail {

struct BeamPoint {
  Vec2 p;
  double range = 0.0;
  double bearing = 0.0;
  std::size_t beam = 0;
};

struct LineFit {
  double r = 0.0;
  double psi = 0.0;
  double rms = 0.0;
  double max_abs_residual = 0.0;
  Mat2 cov = Mat2::Zero();
};

/// Weighted total-least-squares fit in normal form over pts[first..last], with the
/// sandwich covariance of (r, psi) under range/bearing noise.
inline LineFit fit_line(const std::vector<BeamPoint>& pts, std::size_t first, std::size_t last,
                        const ExtractionConfig& cfg) {
  const double w = 1.0 / cfg.var_r;
  double sw = 0.0;
  Vec2 mean = Vec2::Zero();
  for (std::size_t i = first; i <= last; ++i) {
    sw += w;
    mean += w * pts[i].p;
  }
  mean /= sw;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = first; i <= last; ++i) {
    const Vec2 d = pts[i].p - mean;
    sxx += w * d.x() * d.x();
    syy += w * d.y() * d.y();
    sxy += w * d.x() * d.y();
  }
  LineFit fit;
  fit.psi = 0.5 * std::atan2(-2.0 * sxy, syy - sxx);
  fit.r = mean.x() * std::cos(fit.psi) + mean.y() * std::sin(fit.psi);
  if (fit.r < 0.0) {
    fit.r = -fit.r;
    fit.psi += kPi;
  }
  fit.psi = wrap_angle(fit.psi);

  const double cp = std::cos(fit.psi);
  const double sp = std::sin(fit.psi);
  Mat2 info = Mat2::Zero();
  Mat2 meat = Mat2::Zero();
  double sse = 0.0;
  for (std::size_t i = first; i <= last; ++i) {
    const BeamPoint& bp = pts[i];
    const double e = bp.p.x() * cp + bp.p.y() * sp - fit.r;
    sse += e * e;
    fit.max_abs_residual = std::max(fit.max_abs_residual, std::abs(e));
    const double s = -bp.p.x() * sp + bp.p.y() * cp;
    const double inc = bp.bearing - fit.psi;
    const double var_perp = cfg.var_r * std::cos(inc) * std::cos(inc) +
                            bp.range * bp.range * cfg.var_bearing * std::sin(inc) * std::sin(inc);
    const Eigen::Vector2d j(-1.0, s);
    info += w * j * j.transpose();
    meat += w * w * var_perp * j * j.transpose();
  }
  const std::size_t n = last - first + 1;
  fit.rms = std::sqrt(sse / static_cast<double>(n));
  const Eigen::FullPivLU<Mat2> lu(info);
  if (lu.isInvertible()) {
    const Mat2 inv = lu.inverse();
    fit.cov = inv * meat * inv;
    fit.cov = 0.5 * (fit.cov + fit.cov.transpose());
  }
  return fit;
}

inline double chord_distance(const Vec2& a, const Vec2& b, const Vec2& p) {
  const Vec2 d = b - a;
  const double len = d.norm();
  if (len == 0.0) {
    return (p - a).norm();
  }
  return std::abs(d.x() * (p.y() - a.y()) - d.y() * (p.x() - a.x())) / len;
}

using Span = std::pair<std::size_t, std::size_t>;  // inclusive point indices

inline std::size_t farthest_from_chord(const std::vector<BeamPoint>& pts, std::size_t first,
                                       std::size_t last) {
  std::size_t split = first + 1;
  double best = -1.0;
  for (std::size_t i = first + 1; i < last; ++i) {
    const double d = chord_distance(pts[first].p, pts[last].p, pts[i].p);
    if (d > best) {
      best = d;
      split = i;
    }
  }
  return split;
}

inline bool two_lines_fit_better(const std::vector<BeamPoint>& pts, std::size_t first, std::size_t split,
                                 std::size_t last, const LineFit& whole, const ExtractionConfig& cfg) {
  const std::size_t n = last - first + 1;
  if (split - first + 1 < 3 || last - split + 1 < 3 || n < 6) {
    return false;
  }
  const LineFit a = fit_line(pts, first, split, cfg);
  const LineFit b = fit_line(pts, split, last, cfg);
  const auto sse = [](const LineFit& f, std::size_t count) { return f.rms * f.rms * static_cast<double>(count); };
  const double sse1 = sse(whole, n);
  const double sse2 = sse(a, split - first + 1) + sse(b, last - split + 1);
  const double drop = sse1 - sse2;
  if (!(drop > static_cast<double>(n) * cfg.split_floor * cfg.split_floor)) {
    return false;
  }
  return 0.5 * drop * static_cast<double>(n - 4) > cfg.split_f_ratio * sse2;
}

/// Refits a span on its core and re-admits end points outward while their residual
/// stays within split_sigma_factor times the core rms (or split_floor).
inline Span trim_ends(const std::vector<BeamPoint>& pts, Span span, const ExtractionConfig& cfg) {
  const std::size_t n = span.second - span.first + 1;
  if (n < 6) {
    return span;
  }
  // The core keeps at least 4 points so its rms has some degrees of freedom.
  const std::size_t k = std::min<std::size_t>(std::max<std::size_t>(cfg.min_points, 2) - 1, (n - 4) / 2);
  if (k == 0) {
    return span;
  }
  const LineFit core = fit_line(pts, span.first + k, span.second - k, cfg);
  const double tol = std::max(cfg.split_sigma_factor * core.rms, cfg.split_floor);
  const double cp = std::cos(core.psi);
  const double sp = std::sin(core.psi);
  const auto fits = [&](std::size_t i) {
    return std::abs(pts[i].p.x() * cp + pts[i].p.y() * sp - core.r) <= tol;
  };
  std::size_t first = span.first + k;
  while (first > span.first && fits(first - 1)) --first;
  std::size_t last = span.second - k;
  while (last < span.second && fits(last + 1)) ++last;
  return {first, last};
}

/// True when a single line explains pts[first..last] under the split criteria.
inline bool fits_one_line(const std::vector<BeamPoint>& pts, std::size_t first, std::size_t last,
                          const ExtractionConfig& cfg) {
  const LineFit fit = fit_line(pts, first, last, cfg);
  return fit.max_abs_residual <= cfg.effective_split_threshold() &&
         !two_lines_fit_better(pts, first, farthest_from_chord(pts, first, last), last, fit, cfg);
}

inline void split_recursive(const std::vector<BeamPoint>& pts, std::size_t first, std::size_t last,
                            const ExtractionConfig& cfg, std::vector<Span>& out) {
  if (last - first + 1 < 3) {
    out.emplace_back(first, last);
    return;
  }
  if (fits_one_line(pts, first, last, cfg)) {
    out.emplace_back(first, last);
    return;
  }
  const std::size_t split = farthest_from_chord(pts, first, last);
  split_recursive(pts, first, split, cfg, out);
  split_recursive(pts, split, last, cfg, out);
}

}  // namespace detail

/// Split-and-merge segmentation of the scan followed by a weighted line fit per segment.
/// Returns lines in scan order; fewer than min_points returns yields an empty list.
inline std::vector<ExtractedLine> extract_lines(const Scan& scan, const ExtractionConfig& cfg = {}) {
  using detail::BeamPoint;
  std::vector<BeamPoint> pts;
  pts.reserve(scan.ranges.size());
  for (std::size_t i = 0; i < scan.ranges.size(); ++i) {
    const double d = scan.ranges[i];
    if (!Scan::is_return(d)) {
      continue;
    }
    const double b = scan.bearing_of(i);
    pts.push_back({Vec2(d * std::cos(b), d * std::sin(b)), d, b, i});
  }
  std::vector<ExtractedLine> lines;
  if (pts.size() < cfg.min_points || pts.size() < 2) {
    return lines;
  }

  // Split each gap-free cluster, drop pieces too short to fit, then merge neighbours from
  // the same cluster that are collinear or that one line explains without a split.
  std::vector<detail::Span> spans;
  std::vector<std::size_t> cluster_of;
  std::size_t cluster_start = 0;
  std::size_t cluster = 0;
  for (std::size_t i = 1; i <= pts.size(); ++i) {
    if (i == pts.size() || (pts[i].p - pts[i - 1].p).norm() > cfg.max_gap) {
      std::vector<detail::Span> pieces;
      detail::split_recursive(pts, cluster_start, i - 1, cfg, pieces);
      for (const detail::Span& sp : pieces) {
        if (sp.second - sp.first + 1 >= std::max<std::size_t>(cfg.min_points, 2)) {
          spans.push_back(sp);
          cluster_of.push_back(cluster);
        }
      }
      cluster_start = i;
      ++cluster;
    }
  }

  const auto merge_pass = [&] {
    bool merged = true;
    while (merged && spans.size() > 1) {
      merged = false;
      for (std::size_t k = 0; k + 1 < spans.size(); ++k) {
        if (cluster_of[k] != cluster_of[k + 1]) {
          continue;
        }
        const auto [a0, a1] = spans[k];
        const auto [b0, b1] = spans[k + 1];
        const detail::LineFit fa = detail::fit_line(pts, a0, a1, cfg);
        const detail::LineFit fb = detail::fit_line(pts, b0, b1, cfg);
        const bool close = std::abs(wrap_angle(fa.psi - fb.psi)) <= cfg.merge_psi &&
                           std::abs(fa.r - fb.r) <= cfg.merge_r;
        if (close || detail::fits_one_line(pts, a0, b1, cfg)) {
          spans[k] = {a0, b1};
          spans.erase(spans.begin() + static_cast<std::ptrdiff_t>(k) + 1);
          cluster_of.erase(cluster_of.begin() + static_cast<std::ptrdiff_t>(k) + 1);
          merged = true;
          break;
        }
      }
    }
  };
  merge_pass();

  // Move the boundary between touching neighbours to where each point fits its own
  // line best, so corner beams do not bias the wall they were lumped with.
  const std::size_t keep = std::max<std::size_t>(cfg.min_points, 2);
  for (std::size_t k = 0; k + 1 < spans.size(); ++k) {
    if (cluster_of[k] != cluster_of[k + 1] || spans[k + 1].first > spans[k].second + 1) {
      continue;
    }
    const std::size_t lo = spans[k].first;
    const std::size_t hi = spans[k + 1].second;
    for (int iter = 0; iter < 5; ++iter) {
      const detail::LineFit fa = detail::fit_line(pts, spans[k].first, spans[k].second, cfg);
      const detail::LineFit fb = detail::fit_line(pts, spans[k + 1].first, spans[k + 1].second, cfg);
      const auto res2 = [&](const detail::LineFit& f, std::size_t i) {
        const double e = pts[i].p.x() * std::cos(f.psi) + pts[i].p.y() * std::sin(f.psi) - f.r;
        return e * e;
      };
      // cost(s) = sum_{i<=s} resA^2 + sum_{i>s} resB^2, minimized over s.
      double cost = 0.0;
      for (std::size_t i = lo; i <= hi; ++i) cost += res2(fb, i);
      std::size_t best_s = spans[k].second;
      double best_cost = std::numeric_limits<double>::infinity();
      for (std::size_t s = lo; s < hi; ++s) {
        cost += res2(fa, s) - res2(fb, s);
        if (s + 1 - lo >= keep && hi - s >= keep && cost < best_cost) {
          best_cost = cost;
          best_s = s;
        }
      }
      if (best_s == spans[k].second && spans[k + 1].first == best_s + 1) {
        break;
      }
      spans[k].second = best_s;
      spans[k + 1].first = best_s + 1;
    }
  }

  for (detail::Span& sp : spans) {
    sp = detail::trim_ends(pts, sp, cfg);
  }
  merge_pass();

  for (const auto& [first, last] : spans) {
    const std::size_t n = last - first + 1;
    if (n < cfg.min_points) {
      continue;
    }
    const detail::LineFit fit = detail::fit_line(pts, first, last, cfg);
    ExtractedLine line;
    line.local.r = fit.r;
    line.local.psi = fit.psi;
    line.local.cov = fit.cov;
    line.first_beam = pts[first].beam;
    line.last_beam = pts[last].beam;
    line.point_count = n;
    line.rms_residual = fit.rms;
    const Vec2 normal(std::cos(fit.psi), std::sin(fit.psi));
    line.end_a = pts[first].p - (pts[first].p.dot(normal) - fit.r) * normal;
    line.end_b = pts[last].p - (pts[last].p.dot(normal) - fit.r) * normal;
    lines.push_back(line);
  }
  return lines;
}

/// Association thresholds. The scalar gate accepts a pair when
/// max(|dr| / gate_r, |dpsi| / gate_psi) <= 1; the Mahalanobis gate when
/// nu^T S^-1 nu <= mahalanobis_gate with S = H P H^T + line covariance.
struct MatchGate {
  double gate_r = 0.3;
  double gate_psi = 0.15;
  bool use_mahalanobis = false;
  double mahalanobis_gate = 9.21;  // chi-square, 2 DoF, 99 %
  double var_r = 0.03 * 0.03;      // used when a line carries no fit covariance
  double var_psi = deg2rad(0.25) * deg2rad(0.25);
};

struct MatchedPair {
  ExtractedLine extracted;
  GlobalLine map_line;
  std::size_t map_index = 0;
  double distance = 0.0;  // normalized, <= 1
};

struct MatchSet {
  std::vector<MatchedPair> pairs;  // ordered by map index
  std::vector<ExtractedLine> unmatched;

  std::vector<LineMatch> line_matches() const {
    std::vector<LineMatch> out;
    out.reserve(pairs.size());
    for (const MatchedPair& p : pairs) {
      out.push_back({p.extracted.local, p.map_line});
    }
    return out;
  }
};

inline double gated_distance(const ExtractedLine& obs, const GlobalLine& map_line,
                             const PoseEstimate& prior, const MatchGate& gate) {
  const LinePrediction pred = predict_line(prior.mean, map_line);
  const Eigen::Vector2d nu(obs.local.r - pred.t.r, wrap_angle(obs.local.psi - pred.t.psi));
  if (!gate.use_mahalanobis) {
    return std::max(std::abs(nu(0)) / gate.gate_r, std::abs(nu(1)) / gate.gate_psi);
  }
  Mat2 r_line = obs.local.cov;
  if (!(r_line(0, 0) > 0.0) || !(r_line(1, 1) > 0.0)) {
    r_line = Eigen::Vector2d(gate.var_r, gate.var_psi).asDiagonal();
  }
  const Mat2 s = pred.h * prior.cov * pred.h.transpose() + r_line;
  const double d2 = nu.dot(s.fullPivLu().solve(nu));
  return std::sqrt(std::max(d2, 0.0) / gate.mahalanobis_gate);
}

/// Greedy one-to-one association in ascending gated distance. Ties go to the lower
/// map index, then to the extracted line with smaller (r, psi), so the result does not
/// depend on the order of `extracted`.
inline MatchSet match_lines(const std::vector<ExtractedLine>& extracted,
                            const std::vector<GlobalLine>& map, const PoseEstimate& prior,
                            const MatchGate& gate = {}) {
  struct Candidate {
    double distance;
    std::size_t map_index;
    std::size_t obs_index;
  };
  const auto obs_key = [&](std::size_t i) {
    return std::tuple(extracted[i].local.r, extracted[i].local.psi, extracted[i].first_beam);
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < extracted.size(); ++i) {
    for (std::size_t j = 0; j < map.size(); ++j) {
      const double d = gated_distance(extracted[i], map[j], prior, gate);
      if (d <= 1.0) {
        candidates.push_back({d, j, i});
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(), [&](const Candidate& a, const Candidate& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    if (a.map_index != b.map_index) return a.map_index < b.map_index;
    return obs_key(a.obs_index) < obs_key(b.obs_index);
  });

  std::vector<bool> obs_used(extracted.size(), false);
  std::vector<bool> map_used(map.size(), false);
  MatchSet result;
  for (const Candidate& c : candidates) {
    if (obs_used[c.obs_index] || map_used[c.map_index]) {
      continue;
    }
    obs_used[c.obs_index] = true;
    map_used[c.map_index] = true;
    result.pairs.push_back({extracted[c.obs_index], map[c.map_index], c.map_index, c.distance});
  }
  std::sort(result.pairs.begin(), result.pairs.end(),
            [](const MatchedPair& a, const MatchedPair& b) { return a.map_index < b.map_index; });

  std::vector<std::size_t> leftover;
  for (std::size_t i = 0; i < extracted.size(); ++i) {
    if (!obs_used[i]) leftover.push_back(i);
  }
  std::sort(leftover.begin(), leftover.end(),
            [&](std::size_t a, std::size_t b) { return obs_key(a) < obs_key(b); });
  for (std::size_t i : leftover) {
    result.unmatched.push_back(extracted[i]);
  }
  return result;
}

/// Builds a world-frame map from a scan taken at an exactly known pose.
inline std::vector<GlobalLine> build_global_map(const Scan& scan, const Pose& known_pose,
                                                const ExtractionConfig& cfg = {}) {
  std::vector<GlobalLine> map;
  for (const ExtractedLine& l : extract_lines(scan, cfg)) {
    GlobalLine g = local_line_to_global(known_pose, l.local.r, l.local.psi);
    g.p1 = to_world(known_pose, l.end_a);
    g.p2 = to_world(known_pose, l.end_b);
    map.push_back(g);
  }
  return map;
}

}  // namespace fuseloc
