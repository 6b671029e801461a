#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "fuseloc/sensors.hpp"
#include "oracles.hpp"

using namespace fuseloc;

namespace {

World square_room(double half, const Vec2& landmark = Vec2(1.0, 1.0)) {
  return World::rectangular_room(2 * half, 2 * half, landmark);
}

std::vector<std::pair<oracle::Vec2, oracle::Vec2>> segments_of(const World& w) {
  std::vector<std::pair<oracle::Vec2, oracle::Vec2>> out;
  for (const GlobalLine& g : w.walls) out.emplace_back(g.p1, g.p2);
  return out;
}

double sample_variance(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= v.size();
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / (v.size() - 1);
}

}  // namespace

TEST(Random, StreamsAreDistinctAndStable) {
  std::set<std::uint64_t> seen;
  for (Stream s : {Stream::kWheels, Stream::kCompass, Stream::kCamera, Stream::kLrf, Stream::kCalibration}) {
    seen.insert(derive_seed(42, s));
  }
  EXPECT_EQ(seen.size(), 5u);
  EXPECT_EQ(derive_seed(42, Stream::kLrf), derive_seed(42, Stream::kLrf));
  EXPECT_NE(derive_seed(42, Stream::kLrf), derive_seed(43, Stream::kLrf));
  Rng a = make_rng(7, Stream::kWheels), b = make_rng(7, Stream::kWheels);
  EXPECT_EQ(a(), b());
}

TEST(WheelNoise, VarianceScalesWithSquaredSpeed) {
  Rng rng(31);
  std::vector<double> l, r;
  constexpr int kSamples = 100000;
  for (int i = 0; i < kSamples; ++i) {
    const WheelSpeeds u = sample_wheel_speeds({2.0, -4.0}, 0.01, rng);
    l.push_back(u.omega_l);
    r.push_back(u.omega_r);
  }
  EXPECT_NEAR(sample_variance(l) / 0.04, 1.0, 0.05);
  EXPECT_NEAR(sample_variance(r) / 0.16, 1.0, 0.05);
}

TEST(WheelNoise, ZeroDeltaAndZeroSpeedAreExact) {
  Rng rng(32);
  const WheelSpeeds a = sample_wheel_speeds({1.5, 2.5}, 0.0, rng);
  EXPECT_EQ(a.omega_l, 1.5);
  EXPECT_EQ(a.omega_r, 2.5);
  const WheelSpeeds b = sample_wheel_speeds({0.0, 0.0}, 0.01, rng);
  EXPECT_EQ(b.omega_l, 0.0);
  EXPECT_EQ(b.omega_r, 0.0);
  EXPECT_THROW(sample_wheel_speeds({1, 1}, -0.1, rng), InvalidArgument);
}

TEST(Compass, QuantizesToResolution) {
  Rng rng(33);
  EXPECT_NEAR(read_compass(1.0, 0.0, rng), 57.3 * kPi / 180.0, 1e-12);
  EXPECT_NEAR(read_compass(1.0, 0.0, rng), 1.00007, 1e-5);
  EXPECT_NEAR(read_compass(kPi, 0.0, rng), kPi, 1e-12);
  EXPECT_EQ(read_compass(0.123456, 0.0, rng, 0.0), 0.123456);
  EXPECT_THROW(read_compass(0.0, -1.0, rng), InvalidArgument);
}

TEST(Compass, NoiseMatchesSigma) {
  Rng rng(34);
  const double sigma = deg2rad(0.1);
  std::vector<double> err;
  for (int i = 0; i < 20000; ++i) err.push_back(wrap_angle(read_compass(0.5, sigma, rng) - 0.5));
  // Uniform quantization adds resolution^2 / 12.
  const double expected = sigma * sigma + sigma * sigma / 12.0;
  EXPECT_NEAR(std::sqrt(sample_variance(err) / expected), 1.0, 0.05);
  for (double e : err) {
    EXPECT_GT(e + 0.5, -kPi);
    EXPECT_LE(e + 0.5, kPi);
  }
}

TEST(Panorama, PixelBearingConversions) {
  EXPECT_EQ(pixel_to_bearing(0), 0.0);
  EXPECT_EQ(pixel_to_bearing(720), 360.0);
  EXPECT_EQ(pixel_to_bearing(90), 45.0);
  EXPECT_THROW(pixel_to_bearing(-1), InvalidArgument);
  EXPECT_THROW(pixel_to_bearing(720.5), InvalidArgument);
  EXPECT_THROW(pixel_to_bearing(std::nan("")), InvalidArgument);
  EXPECT_EQ(bearing_to_pixel(45.0), 90.0);
  EXPECT_EQ(bearing_to_pixel(-90.0), 540.0);
  EXPECT_EQ(bearing_to_pixel(360.0), 0.0);
}

TEST(Camera, NoiseFreeReadingIsTrueHeading) {
  const World w = square_room(2.0, Vec2(1.0, 1.0));
  Rng rng(35);
  const auto g = read_camera_orientation({0, 0, 0}, w, {}, 0.0, rng, false);
  ASSERT_TRUE(g);
  EXPECT_NEAR(*g, 0.0, 1e-12);
  std::mt19937_64 pick(36);
  std::uniform_real_distribution<double> pos(-1.8, 1.8), ang(-kPi, kPi);
  for (int i = 0; i < 1000; ++i) {
    const Pose p{pos(pick), pos(pick), ang(pick)};
    if ((p.position() - w.landmark).norm() < 1e-3) continue;
    const auto gi = read_camera_orientation(p, w, {}, 0.0, rng, false);
    ASSERT_TRUE(gi);
    EXPECT_NEAR(wrap_angle(*gi - p.theta), 0.0, 1e-9);
  }
}

TEST(Camera, QuantizationBoundsError) {
  const World w = square_room(2.0, Vec2(1.0, 1.0));
  Rng rng(37);
  std::mt19937_64 pick(38);
  std::uniform_real_distribution<double> pos(-1.8, 1.8), ang(-kPi, kPi);
  for (int i = 0; i < 1000; ++i) {
    const Pose p{pos(pick), pos(pick), ang(pick)};
    const auto g = read_camera_orientation(p, w, {}, 0.0, rng, true);
    ASSERT_TRUE(g);
    EXPECT_LE(std::abs(wrap_angle(*g - p.theta)), deg2rad(0.25) + 1e-12);
  }
}

TEST(Camera, OccludedLandmarkGivesNothing) {
  std::vector<std::pair<Vec2, Vec2>> segs = {{Vec2(-2, -2), Vec2(2, -2)}, {Vec2(2, -2), Vec2(2, 2)},
                                             {Vec2(2, 2), Vec2(-2, 2)},   {Vec2(-2, 2), Vec2(-2, -2)},
                                             {Vec2(0.5, -1), Vec2(0.5, 1)}};
  const World w = World::from_segments(segs, Vec2(1.5, 0.0));
  Rng rng(39);
  EXPECT_FALSE(read_camera_orientation({0, 0, 0}, w, {}, 0.0, rng));
  EXPECT_TRUE(read_camera_orientation({1.0, 0, 0}, w, {}, 0.0, rng));
}

TEST(CastScan, KnownRanges) {
  const World w = square_room(2.0);
  Rng rng(40);
  const Scan s = cast_scan({0, 0, 0}, w, SensorNoise::none(), rng);
  ASSERT_EQ(s.ranges.size(), 181u);
  EXPECT_NEAR(s.ranges[90], 2.0, 1e-12);
  EXPECT_NEAR(s.ranges[120], 2.0 / std::cos(deg2rad(30.0)), 1e-12);
  EXPECT_NEAR(s.ranges[120], 2.3094, 1e-4);
  EXPECT_NEAR(s.ranges[0], 2.0, 1e-12);
  EXPECT_NEAR(s.ranges[180], 2.0, 1e-12);
  EXPECT_NO_THROW(s.validate());
}

TEST(CastScan, CornerBeamHitsBothWalls) {
  const World w = square_room(2.0);
  Rng rng(41);
  const Scan s = cast_scan({0, 0, 0}, w, SensorNoise::none(), rng);
  EXPECT_NEAR(s.ranges[135], 2.0 * std::sqrt(2.0), 1e-9);
  EXPECT_NEAR(s.ranges[45], 2.0 * std::sqrt(2.0), 1e-9);
}

TEST(CastScan, MatchesReferenceRayCaster) {
  const World w = World::from_segments({{Vec2(-3, -2), Vec2(3, -2)},
                                        {Vec2(3, -2), Vec2(3, 2)},
                                        {Vec2(3, 2), Vec2(-3, 2)},
                                        {Vec2(-3, 2), Vec2(-3, -2)},
                                        {Vec2(-1, 0.5), Vec2(1, 1.2)}},
                                       Vec2(2, 1.5));
  const auto segs = segments_of(w);
  std::mt19937_64 pick(42);
  std::uniform_real_distribution<double> px(-2.9, 2.9), py(-1.9, 1.9), ang(-kPi, kPi);
  int beams = 0;
  while (beams < 10000) {
    const Pose p{px(pick), py(pick), ang(pick)};
    Rng rng(1);
    const Scan s = cast_scan(p, w, SensorNoise::none(), rng);
    for (std::size_t i = 0; i < s.ranges.size() && beams < 10000; i += 3, ++beams) {
      const auto ref = oracle::brute_force_cast(p.position(), p.theta + s.bearing_of(i), segs);
      ASSERT_TRUE(ref.has_value());
      EXPECT_NEAR(s.ranges[i], std::max(*ref, s.min_range), 1e-9);
    }
  }
}

TEST(CastScan, MaxRangeGivesNoReturn) {
  const World w = square_room(2.0);
  Rng rng(43);
  LrfModel lrf;
  lrf.max_range = 2.5;
  const Scan s = cast_scan({0, 0, 0}, w, SensorNoise::none(), rng, lrf);
  EXPECT_EQ(s.ranges[135], kNoReturn);
  EXPECT_NEAR(s.ranges[90], 2.0, 1e-12);
  EXPECT_NO_THROW(s.validate());
}

TEST(CastScan, DeterministicPerSeedAndRejectsOutsidePose) {
  const World w = square_room(2.0);
  Rng a(44), b(44);
  const Scan sa = cast_scan({0.3, 0.1, 0.2}, w, SensorNoise{}, a);
  const Scan sb = cast_scan({0.3, 0.1, 0.2}, w, SensorNoise{}, b);
  EXPECT_EQ(sa.ranges, sb.ranges);
  EXPECT_THROW(cast_scan({5, 0, 0}, w, SensorNoise{}, a), InvalidArgument);
}

TEST(CastScan, RangeNoiseMatchesSigma) {
  const World w = square_room(2.0);
  Rng rng(45);
  std::vector<double> err;
  for (int k = 0; k < 2000; ++k) err.push_back(cast_scan({0, 0, 0}, w, SensorNoise{}, rng).ranges[90] - 2.0);
  EXPECT_NEAR(std::sqrt(sample_variance(err)) / 0.03, 1.0, 0.05);
}

TEST(World, ValidationAndBounds) {
  EXPECT_THROW(World::from_segments({{Vec2(0, 0), Vec2(1, 0)}, {Vec2(1, 0), Vec2(1, 1)}}, Vec2(0.5, 0.5)),
               InvalidArgument);
  EXPECT_THROW(World::rectangular_room(4, 4, Vec2(3, 0)), InvalidArgument);
  const World w = World::rectangular_room(6, 5, Vec2(2.8, 2.3));
  EXPECT_EQ(w.walls.size(), 4u);
  EXPECT_NEAR(w.bounds.diagonal(), std::sqrt(61.0), 1e-12);
}

TEST(Camera, AlignedAndRotatedExamples) {
  const World w = World::rectangular_room(12, 12, Vec2(5, 0));
  Rng rng(46);
  const auto aligned = read_camera_orientation({0, 0, 0}, w, {}, 0.0, rng);
  ASSERT_TRUE(aligned);
  EXPECT_NEAR(*aligned, 0.0, 1e-12);
  const auto rotated = read_camera_orientation({0, 0, kPi / 4}, w, {}, 0.0, rng);
  ASSERT_TRUE(rotated);
  EXPECT_NEAR(*rotated, kPi / 4, deg2rad(0.5));
}

TEST(Compass, StdMatchesLargeSigma) {
  Rng rng(47);
  std::vector<double> err;
  for (int i = 0; i < 100000; ++i) err.push_back(wrap_angle(read_compass(0.3, 0.01, rng) - 0.3));
  EXPECT_NEAR(std::sqrt(sample_variance(err)) / 0.01, 1.0, 0.05);
}
