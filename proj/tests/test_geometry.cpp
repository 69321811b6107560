#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "contperc/error.hpp"
#include "contperc/geometry.hpp"
#include "contperc/rng.hpp"

using namespace contperc;
using namespace contperc::geometry;

TEST(UnitBall, LowDimensions) {
  EXPECT_NEAR(unit_ball_volume(1), 2.0, 1e-14);
  EXPECT_NEAR(unit_ball_volume(2), std::numbers::pi, 1e-14);
  EXPECT_NEAR(unit_ball_volume(3), 4.0 * std::numbers::pi / 3.0, 1e-14);
  EXPECT_THROW(unit_ball_volume(0), InvalidArgument);
}

TEST(UnitBall, TwoStepRecursion) {
  for (int d = 3; d <= 200; ++d) {
    const double lhs = log_unit_ball_volume(d);
    const double rhs = log_unit_ball_volume(d - 2) + std::log(2.0 * std::numbers::pi / d);
    EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::fabs(lhs))) << d;
  }
  EXPECT_NEAR(unit_ball_volume(20) / unit_ball_volume(18), 2.0 * std::numbers::pi / 20.0, 1e-13);
}

TEST(Slab, ReferenceVolumes) {
  EXPECT_NEAR(slab_volume({1, 1.0, 0.0, 1.0}), 2.0, 1e-13);
  EXPECT_NEAR(slab_volume({2, 1.0, 0.0, 1.0}), std::numbers::pi, 1e-13);
  const double h = 0.5;
  EXPECT_NEAR(slab_volume({3, 1.0, 0.5, 1.0}), std::numbers::pi * h * h * (3.0 - h) / 3.0, 1e-12);
  // Half disk below the chord y_1 = 0.5 plus nothing else.
  const double segment = std::acos(0.5) - 0.5 * std::sqrt(0.75);
  EXPECT_NEAR(slab_volume({2, 1.0, 0.0, 0.5}), std::numbers::pi - segment, 1e-12);
  EXPECT_NEAR(slab_volume({2, 3.0, 0.5, 1.0}), 9.0 * segment, 1e-11);
}

TEST(Slab, ZeroLowerIncludesWholeLowerSide) {
  for (int d : {2, 5, 40}) {
    const double half = 0.5 * unit_ball_volume(d);
    EXPECT_GT(slab_volume({d, 1.0, 0.0, 1e-6}), half * (1 - 1e-12));
    EXPECT_LT(slab_volume({d, 1.0, 0.0, 1e-6}), half * (1 + 1e-3));
  }
}

TEST(Slab, PartitionTilesTheBall) {
  for (int d : {1, 2, 3, 7, 25, 100}) {
    for (double r : {0.5, 1.0, 3.0}) {
      for (int n : {1, 2, 7, 40}) {
        double total = 0.0;
        for (int j = 0; j < n; ++j)
          total += std::exp(log_slab_volume({d, r, double(j) / n, double(j + 1) / n}) - log_ball_volume(d, r));
        EXPECT_NEAR(total, 1.0, 1e-10) << d << ' ' << r << ' ' << n;
      }
    }
  }
}

TEST(Slab, SandwichBounds) {
  for (int d = 3; d <= 100; ++d) {
    for (double a : {0.05, 0.3, 0.6, 0.9}) {
      for (double b : {a + 0.01, 0.5 * (a + 1.0), 1.0}) {
        const SlabSpec s{d, 1.7, a, std::min(b, 1.0)};
        const double v = log_slab_volume(s);
        EXPECT_LE(log_slab_lower_bound(s), v + 1e-12) << d << ' ' << a << ' ' << b;
        EXPECT_LE(v, log_slab_upper_bound(s) + 1e-12) << d << ' ' << a << ' ' << b;
      }
    }
  }
}

TEST(Slab, LogRateApproachesLimit) {
  EXPECT_NEAR(slab_log_rate({1000, 1.0, 0.0, 0.5}), 0.0, 0.01);
  EXPECT_NEAR(slab_log_rate({1000, 2.0, 0.6, 0.7}), std::log(1.6), 0.02);
  for (double a : {0.1, 0.5, 0.8}) {
    const SlabSpec s{2000, 1.3, a, a + 0.1};
    EXPECT_NEAR(slab_log_rate(s), slab_log_rate_limit(s), 0.02);
  }
}

TEST(Slab, RejectsInvalidSpecs) {
  EXPECT_THROW(slab_volume({3, 1.0, 0.5, 0.5}), InvalidArgument);
  EXPECT_THROW(slab_volume({3, -1.0, 0.0, 0.5}), InvalidArgument);
  EXPECT_THROW(slab_volume({3, 1.0, 1.0, 1.0}), InvalidArgument);
  EXPECT_THROW(slab_volume({0, 1.0, 0.0, 1.0}), InvalidArgument);
}

// Rejection sampling from the enclosing cube.
TEST(Slab, MonteCarloAgreement) {
  rng::Stream g(3, 0);
  for (int d : {3, 4}) {
    for (auto [a, b] : {std::pair{0.0, 0.4}, std::pair{0.2, 0.7}, std::pair{0.5, 1.0}}) {
      const int n = 400000;
      int hits = 0;
      std::vector<double> y(d);
      for (int i = 0; i < n; ++i) {
        double norm = 0.0;
        for (double& v : y) {
          v = 2.0 * g.uniform() - 1.0;
          norm += v * v;
        }
        if (norm >= 1.0) continue;
        hits += a == 0.0 ? y[0] <= b : (y[0] > a && y[0] <= b);
      }
      const double p = double(hits) / n;
      const double cube = std::pow(2.0, d);
      const double se = cube * std::sqrt(p * (1 - p) / n);
      EXPECT_NEAR(slab_volume({d, 1.0, a, b}), cube * p, 3 * se) << d << ' ' << a << ' ' << b;
    }
  }
}
