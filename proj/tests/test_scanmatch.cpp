#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "fuseloc/scanmatch.hpp"
#include "oracles.hpp"

using namespace fuseloc;

namespace {

using Segments = std::vector<std::pair<Vec2, Vec2>>;

Segments room(double half) {
  const Vec2 a(-half, -half), b(half, -half), c(half, half), d(-half, half);
  return {{a, b}, {b, c}, {c, d}, {d, a}};
}

/// Scan built with the reference ray caster; beam i points at theta + i deg - 90 deg.
Scan synthetic_scan(const Pose& pose, const Segments& walls, double sigma = 0.0, std::mt19937_64* rng = nullptr) {
  Scan s;
  s.pose_hint.mean = pose;
  s.ranges.assign(Scan::beam_count(s.angle_resolution), kNoReturn);
  std::normal_distribution<double> noise(0.0, sigma);
  for (std::size_t i = 0; i < s.ranges.size(); ++i) {
    const double heading = pose.theta + deg2rad(static_cast<double>(i)) - kPi / 2;
    const auto d = oracle::brute_force_cast(pose.position(), heading, walls);
    if (!d || *d > s.max_range) continue;
    s.ranges[i] = std::clamp(*d + (rng ? noise(*rng) : 0.0), s.min_range, s.max_range);
  }
  return s;
}

ExtractedLine obs_line(double r, double psi, std::size_t beam = 0) {
  ExtractedLine l;
  l.local.r = r;
  l.local.psi = psi;
  l.first_beam = beam;
  return l;
}

GlobalLine map_line(double rho, double beta) {
  GlobalLine g;
  g.rho = rho;
  g.beta = beta;
  return g;
}

const ExtractedLine* find_line(const std::vector<ExtractedLine>& lines, double psi) {
  for (const ExtractedLine& l : lines) {
    if (std::abs(wrap_angle(l.local.psi - psi)) < 0.1) return &l;
  }
  return nullptr;
}

}  // namespace

TEST(Scan, BeamGeometry) {
  Scan s;
  EXPECT_EQ(Scan::beam_count(deg2rad(1.0)), 181u);
  EXPECT_EQ(Scan::beam_count(deg2rad(0.5)), 361u);
  EXPECT_NEAR(s.bearing_of(0), -kPi / 2, 1e-15);
  EXPECT_NEAR(s.bearing_of(90), 0.0, 1e-15);
  EXPECT_NEAR(s.bearing_of(180), kPi / 2, 1e-15);
}

TEST(Scan, ValidateRejectsBadInput) {
  Scan s;
  s.ranges.assign(181, 1.0);
  EXPECT_NO_THROW(s.validate());
  s.ranges[3] = std::nan("");
  EXPECT_THROW(s.validate(), InvalidArgument);
  s.ranges[3] = 0.01;
  EXPECT_THROW(s.validate(), InvalidArgument);
  s.ranges[3] = kNoReturn;
  EXPECT_NO_THROW(s.validate());
  s.ranges.pop_back();
  EXPECT_THROW(s.validate(), InvalidArgument);
}

TEST(ExtractLines, SingleWallAhead) {
  const Scan s = synthetic_scan({0, 0, 0}, {{Vec2(2, -100), Vec2(2, 100)}});
  const auto lines = extract_lines(s);
  ASSERT_EQ(lines.size(), 1u);
  EXPECT_NEAR(lines[0].local.r, 2.0, 1e-9);
  EXPECT_NEAR(lines[0].local.psi, 0.0, 1e-9);
  EXPECT_LE(lines[0].rms_residual, 1e-9);
  EXPECT_NEAR(lines[0].end_a.x(), 2.0, 1e-9);
  EXPECT_LT(lines[0].end_a.y(), 0.0);
  EXPECT_GT(lines[0].end_b.y(), 0.0);
}

TEST(ExtractLines, SquareRoomFromCenter) {
  const Scan s = synthetic_scan({0, 0, 0}, room(2.0));
  const auto lines = extract_lines(s);
  ASSERT_GE(lines.size(), 2u);
  ASSERT_LE(lines.size(), 3u);
  for (const ExtractedLine& l : lines) {
    EXPECT_NEAR(l.local.r, 2.0, 1e-6);
    const double q = l.local.psi / (kPi / 2);
    EXPECT_NEAR(q, std::round(q), 1e-8);
  }
  ASSERT_NE(find_line(lines, 0.0), nullptr);
  ASSERT_NE(find_line(lines, kPi / 2), nullptr);
  ASSERT_NE(find_line(lines, -kPi / 2), nullptr);
}

TEST(ExtractLines, NoReturnsGivesNothing) {
  Scan s;
  s.ranges.assign(181, kNoReturn);
  EXPECT_TRUE(extract_lines(s).empty());
  s.ranges[10] = s.ranges[11] = 2.0;
  EXPECT_TRUE(extract_lines(s).empty());
}

TEST(ExtractLines, RangeGapSeparatesSegments) {
  // Two collinear wall pieces with a 2 m hole between them.
  const Scan s = synthetic_scan({0, 0, 0}, {{Vec2(2, -6), Vec2(2, -1)}, {Vec2(2, 1), Vec2(2, 6)}});
  const auto lines = extract_lines(s);
  ASSERT_EQ(lines.size(), 2u);
  for (const ExtractedLine& l : lines) EXPECT_NEAR(l.local.r, 2.0, 1e-9);
}

TEST(ExtractLines, MatchesReferenceFitOnNoisyWall) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const Scan s = synthetic_scan({0, 0, 0.2}, {{Vec2(2.5, -3), Vec2(2.5, 3)}}, 0.005, &rng);
    const auto lines = extract_lines(s);
    ASSERT_EQ(lines.size(), 1u);
    std::vector<oracle::Vec2> pts;
    for (std::size_t i = lines[0].first_beam; i <= lines[0].last_beam; ++i) {
      if (!Scan::is_return(s.ranges[i])) continue;
      const double b = s.bearing_of(i);
      pts.emplace_back(s.ranges[i] * std::cos(b), s.ranges[i] * std::sin(b));
    }
    const oracle::NormalForm ref = oracle::brute_force_line_fit(pts);
    EXPECT_NEAR(lines[0].local.r, ref.r, 1e-6);
    EXPECT_NEAR(wrap_angle(lines[0].local.psi - ref.psi), 0.0, 1e-6);
  }
}

TEST(ExtractLines, NoisyWallsStayWhole) {
  std::mt19937_64 rng(33);
  int whole = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto lines = extract_lines(synthetic_scan({0, 0, 0}, room(2.0), 0.03, &rng));
    whole += lines.size() == 3 ? 1 : 0;
  }
  EXPECT_GE(whole, 97);
}

TEST(ExtractLines, FitCovarianceMatchesScatter) {
  std::mt19937_64 rng(22);
  const double sigma = 0.03;
  ExtractionConfig cfg;
  cfg.var_r = sigma * sigma;
  const Segments wall = {{Vec2(3, -4), Vec2(3, 4)}};
  std::vector<double> r, psi;
  Mat2 cov_sum = Mat2::Zero();
  constexpr int kScans = 500;
  for (int k = 0; k < kScans; ++k) {
    const auto lines = extract_lines(synthetic_scan({0, 0, 0}, wall, sigma, &rng), cfg);
    ASSERT_EQ(lines.size(), 1u);
    r.push_back(lines[0].local.r);
    psi.push_back(wrap_angle(lines[0].local.psi));
    cov_sum += lines[0].local.cov;
  }
  const auto variance = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= v.size();
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / (v.size() - 1);
  };
  const Mat2 predicted = cov_sum / kScans;
  const double ratio_r = variance(r) / predicted(0, 0);
  const double ratio_psi = variance(psi) / predicted(1, 1);
  EXPECT_GT(ratio_r, 0.5);
  EXPECT_LT(ratio_r, 2.0);
  EXPECT_GT(ratio_psi, 0.5);
  EXPECT_LT(ratio_psi, 2.0);
}

TEST(MatchLines, ScalarGateBoundary) {
  const PoseEstimate prior{{0, 0, 0}, 0.01 * Mat3::Identity()};
  const std::vector<GlobalLine> map = {map_line(1.0, 0.0)};
  EXPECT_NEAR(gated_distance(obs_line(1.0, 0.0), map[0], prior, {}), 0.0, 1e-12);
  EXPECT_NEAR(gated_distance(obs_line(1.15, 0.075), map[0], prior, {}), 0.5, 1e-12);

  EXPECT_EQ(match_lines({obs_line(1.29, 0.0)}, map, prior).pairs.size(), 1u);
  const MatchSet far = match_lines({obs_line(1.31, 0.0)}, map, prior);
  EXPECT_TRUE(far.pairs.empty());
  EXPECT_EQ(far.unmatched.size(), 1u);
  EXPECT_TRUE(match_lines({obs_line(1.0, 0.16)}, map, prior).pairs.empty());
}

TEST(MatchLines, AngleGateWrapsAround) {
  const PoseEstimate prior{{0, 0, 0}, 0.01 * Mat3::Identity()};
  const std::vector<GlobalLine> map = {map_line(2.0, kPi)};
  const MatchSet m = match_lines({obs_line(2.0, -kPi + 0.01)}, map, prior);
  EXPECT_EQ(m.pairs.size(), 1u);
}

TEST(MatchLines, OneToOneClosestWins) {
  const PoseEstimate prior{{0, 0, 0}, 0.01 * Mat3::Identity()};
  const std::vector<GlobalLine> map = {map_line(1.0, 0.0), map_line(2.0, kPi / 2)};
  const std::vector<ExtractedLine> obs = {obs_line(1.1, 0.0, 1), obs_line(1.02, 0.0, 2),
                                          obs_line(2.0, kPi / 2, 3)};
  const MatchSet m = match_lines(obs, map, prior);
  ASSERT_EQ(m.pairs.size(), 2u);
  EXPECT_EQ(m.pairs[0].map_index, 0u);
  EXPECT_EQ(m.pairs[0].extracted.first_beam, 2u);
  EXPECT_EQ(m.pairs[1].map_index, 1u);
  ASSERT_EQ(m.unmatched.size(), 1u);
  EXPECT_EQ(m.unmatched[0].first_beam, 1u);
  EXPECT_EQ(m.line_matches().size(), 2u);
}

TEST(MatchLines, PermutationInvariantAndOneToOne) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> rho(0.5, 4.0), ang(-kPi, kPi), jitter(-0.2, 0.2);
  for (int trial = 0; trial < 200; ++trial) {
    const PoseEstimate prior{{0, 0, 0}, 0.01 * Mat3::Identity()};
    std::vector<GlobalLine> map;
    for (int j = 0; j < 4; ++j) map.push_back(map_line(rho(rng), ang(rng)));
    std::vector<ExtractedLine> obs;
    for (int i = 0; i < 6; ++i) {
      const GlobalLine& g = map[i % map.size()];
      obs.push_back(obs_line(g.rho + jitter(rng), wrap_angle(g.beta + 0.5 * jitter(rng)), i));
    }
    const MatchSet a = match_lines(obs, map, prior);
    std::shuffle(obs.begin(), obs.end(), rng);
    const MatchSet b = match_lines(obs, map, prior);
    ASSERT_EQ(a.pairs.size(), b.pairs.size());
    std::vector<std::size_t> used;
    for (std::size_t k = 0; k < a.pairs.size(); ++k) {
      EXPECT_EQ(a.pairs[k].map_index, b.pairs[k].map_index);
      EXPECT_EQ(a.pairs[k].extracted.first_beam, b.pairs[k].extracted.first_beam);
      EXPECT_LE(a.pairs[k].distance, 1.0);
      used.push_back(a.pairs[k].extracted.first_beam);
    }
    std::sort(used.begin(), used.end());
    EXPECT_EQ(std::adjacent_find(used.begin(), used.end()), used.end());
    EXPECT_EQ(a.pairs.size() + a.unmatched.size(), obs.size());
  }
}

TEST(MatchLines, MahalanobisGateUsesUncertainty) {
  MatchGate gate;
  gate.use_mahalanobis = true;
  const std::vector<GlobalLine> map = {map_line(1.0, 0.0)};
  const ExtractedLine obs = obs_line(1.2, 0.0);
  const PoseEstimate tight{{0, 0, 0}, 1e-6 * Mat3::Identity()};
  const PoseEstimate loose{{0, 0, 0}, 0.05 * Mat3::Identity()};
  EXPECT_TRUE(match_lines({obs}, map, tight, gate).pairs.empty());
  EXPECT_EQ(match_lines({obs}, map, loose, gate).pairs.size(), 1u);
}

TEST(BuildGlobalMap, RecoversRoomWalls) {
  const Pose pose{0.4, -0.3, 0.35};
  const Scan s = synthetic_scan(pose, room(2.0));
  const auto map = build_global_map(s, pose);
  ASSERT_GE(map.size(), 2u);
  for (const GlobalLine& g : map) {
    EXPECT_NEAR(g.rho, 2.0, 1e-6);
    const double q = g.beta / (kPi / 2);
    EXPECT_NEAR(q, std::round(q), 1e-6);
    // Endpoints lie on the line.
    EXPECT_NEAR(g.signed_distance(g.p1), 0.0, 1e-6);
    EXPECT_NEAR(g.signed_distance(g.p2), 0.0, 1e-6);
  }
}

TEST(BuildGlobalMap, RoundTripsThroughLocalFrame) {
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> pos(-1.0, 1.0), ang(-kPi, kPi);
  for (int trial = 0; trial < 50; ++trial) {
    const Pose pose{pos(rng), pos(rng), ang(rng)};
    const Scan s = synthetic_scan(pose, room(3.0));
    const auto local = extract_lines(s);
    const auto map = build_global_map(s, pose);
    ASSERT_EQ(local.size(), map.size());
    for (std::size_t k = 0; k < map.size(); ++k) {
      const LineTransform t = global_line_to_local(pose, map[k]);
      EXPECT_NEAR(t.r, local[k].local.r, 1e-9);
      EXPECT_NEAR(wrap_angle(t.psi - local[k].local.psi), 0.0, 1e-9);
    }
  }
}
