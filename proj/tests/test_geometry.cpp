#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fuseloc/geometry.hpp"
#include "oracles.hpp"

using namespace fuseloc;

TEST(WrapAngle, Examples) {
  EXPECT_EQ(wrap_angle(0.0), 0.0);
  EXPECT_NEAR(wrap_angle(1.5 * kPi), -0.5 * kPi, 1e-15);
  EXPECT_EQ(wrap_angle(-kPi), kPi);
  EXPECT_EQ(wrap_angle(kPi), kPi);
}

TEST(WrapAngle, RejectsNonFinite) {
  EXPECT_THROW(wrap_angle(std::nan("")), InvalidArgument);
  EXPECT_THROW(wrap_angle(INFINITY), InvalidArgument);
}

TEST(WrapAngle, IdempotentAndCongruent) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 10000; ++i) {
    const double a = u(rng);
    const double w = wrap_angle(a);
    EXPECT_GT(w, -kPi);
    EXPECT_LE(w, kPi);
    EXPECT_EQ(wrap_angle(w), w);
    const double k = (a - w) / kTwoPi;
    EXPECT_NEAR(k, std::round(k), 1e-9);
  }
}

TEST(LineThroughPoints, Examples) {
  const GlobalLine a = line_through_points({2, -1}, {2, 1});
  EXPECT_NEAR(a.rho, 2.0, 1e-12);
  EXPECT_NEAR(a.beta, 0.0, 1e-12);
  const GlobalLine b = line_through_points({-1, 3}, {1, 3});
  EXPECT_NEAR(b.rho, 3.0, 1e-12);
  EXPECT_NEAR(b.beta, kPi / 2, 1e-12);
  EXPECT_THROW(line_through_points({0, 0}, {0, 0}), DegenerateInput);
}

TEST(LineThroughPoints, EndpointsSatisfyNormalForm) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (int i = 0; i < 1000; ++i) {
    const Vec2 p(u(rng), u(rng)), q(u(rng), u(rng));
    const GlobalLine l = line_through_points(p, q);
    EXPECT_GE(l.rho, 0.0);
    EXPECT_LE(std::abs(l.signed_distance(p)), 1e-9);
    EXPECT_LE(std::abs(l.signed_distance(q)), 1e-9);
  }
}

TEST(GlobalLineToLocal, ExamplesAgainstPointSamplingOracle) {
  struct Case { Pose pose; double rho, beta, c, r, psi; };
  const Case cases[] = {
      {{0, 0, 0}, 1.0, 0.0, 1.0, 1.0, 0.0},
      {{2, 0, 0}, 1.0, 0.0, -1.0, 1.0, kPi},
      {{1, 1, kPi / 2}, 2.0, kPi / 4, 2.0 - std::sqrt(2.0), 2.0 - std::sqrt(2.0), -kPi / 4},
  };
  for (const Case& c : cases) {
    GlobalLine line;
    line.rho = c.rho;
    line.beta = c.beta;
    const LineTransform t = global_line_to_local(c.pose, line);
    const oracle::NormalForm o = oracle::line_in_robot_frame(c.pose.x, c.pose.y, c.pose.theta, c.rho, c.beta);
    EXPECT_NEAR(t.c, c.c, 1e-12);
    EXPECT_NEAR(t.r, c.r, 1e-12);
    EXPECT_NEAR(std::abs(wrap_angle(t.psi - c.psi)), 0.0, 1e-12);
    EXPECT_NEAR(t.r, o.r, 1e-12);
    EXPECT_NEAR(std::abs(wrap_angle(t.psi - o.psi)), 0.0, 1e-12);
  }
  EXPECT_NEAR(2.0 - std::sqrt(2.0), 0.58579, 1e-5);
}

TEST(GlobalLineToLocal, SampledPointsLieOnLocalLine) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> pos(-10.0, 10.0), ang(-kPi, kPi), rho(0.0, 15.0), s(-20.0, 20.0);
  for (int i = 0; i < 1000; ++i) {
    const Pose pose{pos(rng), pos(rng), ang(rng)};
    GlobalLine line;
    line.rho = rho(rng);
    line.beta = ang(rng);
    const LineTransform t = global_line_to_local(pose, line);
    EXPECT_GE(t.r, 0.0);
    const Vec2 n = line.normal();
    const Vec2 dir(-n.y(), n.x());
    for (int k = 0; k < 5; ++k) {
      const Vec2 pw = line.rho * n + s(rng) * dir;
      const Vec2 pr = to_robot(pose, pw);
      EXPECT_NEAR(pr.x() * std::cos(t.psi) + pr.y() * std::sin(t.psi), t.r, 1e-9);
    }
  }
}

TEST(GlobalLineToLocal, IdentityPoseReturnsGlobalParameters) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ang(-kPi, kPi), rho(0.0, 15.0);
  for (int i = 0; i < 200; ++i) {
    GlobalLine line;
    line.rho = rho(rng);
    line.beta = wrap_angle(ang(rng));
    const LineTransform t = global_line_to_local({0, 0, 0}, line);
    EXPECT_NEAR(t.r, line.rho, 1e-15);
    EXPECT_NEAR(t.psi, line.beta, 1e-15);
  }
}

TEST(LocalLineToGlobal, RoundTrip) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> pos(-10.0, 10.0), ang(-kPi, kPi), rho(0.0, 15.0);
  int checked = 0;
  while (checked < 1000) {
    const Pose pose{pos(rng), pos(rng), ang(rng)};
    GlobalLine line;
    line.rho = rho(rng);
    line.beta = ang(rng);
    const LineTransform t = global_line_to_local(pose, line);
    if (t.r < 1e-3) continue;
    const GlobalLine back = local_line_to_global(pose, t.r, t.psi);
    const LineTransform again = global_line_to_local(pose, back);
    EXPECT_NEAR(again.r, t.r, 1e-9);
    EXPECT_NEAR(wrap_angle(again.psi - t.psi), 0.0, 1e-9);
    ++checked;
  }
}
