#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "contperc/boolean_model.hpp"
#include "contperc/error.hpp"
#include "oracles.hpp"

using namespace contperc;
using namespace contperc::boolean_model;

namespace {

BallConfiguration two_balls(double distance) {
  BallConfiguration c;
  c.dimension = 2;
  c.side = 10.0;
  c.coords = {3.0, 5.0, 3.0 + distance, 5.0};
  c.radii = {1.0, 1.0};
  c.atom = {0, 0};
  return c;
}

std::size_t core_count(const BallConfiguration& c) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    bool inside = true;
    for (double x : c.frame_center(i)) inside &= x >= 0.0 && x < c.side;
    n += inside;
  }
  return n;
}

}  // namespace

TEST(Sampling, ZeroIntensityIsEmpty) {
  const auto c = sample(RadiusMixture::dirac(1.0), 0.0, {2, 10.0}, 1);
  EXPECT_EQ(c.size(), 0u);
  EXPECT_FALSE(percolates(clusters(c, {2, 10.0}), c, {2, 10.0}));
}

TEST(Sampling, CoreCountMean) {
  const BoxSpec box{2, 10.0};
  double total = 0.0;
  const int seeds = 1000;
  for (int s = 0; s < seeds; ++s) total += core_count(sample(RadiusMixture::dirac(1.0), 1.0, box, s));
  EXPECT_NEAR(total / seeds, 100.0, 3.0 * std::sqrt(100.0 / seeds));
}

TEST(Sampling, HaloIsPopulated) {
  const auto c = sample(RadiusMixture::dirac(1.0), 1.0, {2, 10.0}, 4);
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (double x : c.center(i)) {
      EXPECT_GE(x, -1.0);
      EXPECT_LT(x, 11.0);
    }
  }
  EXPECT_GT(c.size(), core_count(c));
}

TEST(Sampling, RadiusFrequencies) {
  const auto m = RadiusMixture::parse("1:3,2:1");
  std::size_t big = 0, all = 0;
  for (int s = 0; s < 200; ++s) {
    const auto c = sample(m, 0.5, {2, 20.0}, s);
    for (std::size_t i = 0; i < c.size(); ++i) big += c.radius(i) == 2.0;
    all += c.size();
  }
  const double p = double(big) / all;
  EXPECT_NEAR(p, 0.25, 4.0 * std::sqrt(0.25 * 0.75 / all));
}

TEST(Sampling, Deterministic) {
  const auto m = RadiusMixture::parse("1:1,1.5:0.2");
  const BoxSpec box{3, 9.0};
  const auto a = sample(m, 0.2, box, 77, 3);
  const auto b = sample(m, 0.2, box, 77, 3);
  EXPECT_EQ(a.coords, b.coords);
  EXPECT_EQ(a.radii, b.radii);
  EXPECT_EQ(clusters(a, box).root, clusters(b, box).root);
  EXPECT_NE(sample(m, 0.2, box, 78, 3).coords, a.coords);
}

TEST(Sampling, ThinningMatchesLowerIntensity) {
  const BoxSpec box{2, 12.0};
  const auto m = RadiusMixture::dirac(1.0);
  const int seeds = 600;
  double thinned = 0.0, direct = 0.0;
  for (int s = 0; s < seeds; ++s) {
    thinned += double(thin(sample(m, 1.0, box, s), 0.3, s).size());
    direct += double(sample(m, 0.3, box, s + 100000).size());
  }
  const double mean = 0.3 * 14.0 * 14.0;
  EXPECT_NEAR(thinned / seeds, mean, 4.0 * std::sqrt(mean / seeds));
  EXPECT_NEAR(direct / seeds, mean, 4.0 * std::sqrt(mean / seeds));
}

TEST(Sampling, CapacityGuard) {
  EXPECT_THROW(sample(RadiusMixture::dirac(1.0), 1e6, {2, 1e4}, 1), CapacityError);
  EXPECT_THROW(sample(RadiusMixture::dirac(1.0), 1.0, {2, 4.0}, 1), InvalidArgument);
  EXPECT_THROW(sample(RadiusMixture::dirac(1.0), 1.0, {1, 10.0}, 1), InvalidArgument);
}

TEST(Clusters, OpenBallContact) {
  const BoxSpec box{2, 10.0};
  const auto near = two_balls(1.9);
  EXPECT_TRUE(clusters(near, box).same_cluster(0, 1));
  const auto touching = two_balls(2.0);
  EXPECT_FALSE(clusters(touching, box).same_cluster(0, 1));
}

TEST(Clusters, TorusWraps) {
  BallConfiguration c;
  c.dimension = 2;
  c.boundary = Boundary::kTorus;
  c.side = 10.0;
  c.coords = {0.5, 5.0, 9.0, 5.0};
  c.radii = {1.0, 1.0};
  c.atom = {0, 0};
  const BoxSpec box{2, 10.0, Boundary::kTorus};
  EXPECT_TRUE(clusters(c, box).same_cluster(0, 1));
  EXPECT_THROW(percolates(clusters(c, box), c, box), NotSupported);
}

TEST(Clusters, MatchAllPairsOracle) {
  const auto m = RadiusMixture::parse("0.3:2,0.7:1,1:0.5");
  for (int d : {2, 3, 4}) {
    for (Boundary b : {Boundary::kCrossing, Boundary::kTorus}) {
      const BoxSpec box{d, 5.0, b};
      for (int s = 0; s < 40; ++s) {
        const double lambda = 0.02 * (1 + s % 10);
        const auto c = sample(m, lambda, box, s);
        if (c.size() > 400) continue;
        EXPECT_EQ(clusters(c, box).canonical_labels(), oracle::all_pairs_labels(c)) << d << ' ' << s;
      }
    }
  }
}

TEST(Percolation, EmptyAndSupercritical) {
  const BoxSpec box{2, 32.0};
  int crossed = 0;
  const double lambda = 3.0 / std::numbers::pi;
  for (int s = 0; s < 100; ++s) {
    const auto c = sample(RadiusMixture::dirac(1.0), lambda, box, s);
    crossed += percolates(clusters(c, box), c, box);
  }
  EXPECT_GE(crossed, 99);
}

TEST(Percolation, MonotoneUnderThinning) {
  const BoxSpec box{2, 16.0};
  const auto m = RadiusMixture::dirac(1.0);
  int both = 0;
  for (int s = 0; s < 100; ++s) {
    const auto master = sample(m, 1.6 / std::numbers::pi, box, s);
    const auto thinned = thin(master, 0.7, s);
    const bool hi = percolates(clusters(master, box), master, box);
    const bool lo = percolates(clusters(thinned, box), thinned, box);
    EXPECT_TRUE(!lo || hi) << s;
    both += lo;
  }
  EXPECT_GT(both, 0);
}

TEST(Percolation, CrossingTimeAgreesWithDirectSampling) {
  const auto m = RadiusMixture::parse("1:1,2:0.1");
  const BoxSpec box{2, 20.0};
  const auto frame = SamplingFrame::make(m, box);
  for (std::uint64_t t = 0; t < 40; ++t) {
    const double time = crossing_time(frame, 5, t, kMaxExpectedBalls);
    for (double normalized : {2.0, 3.0, 4.0, 5.0, 7.0}) {
      const auto c = sample_frame(frame, normalized, 5, t);
      const bool crossed = percolates(clusters(c, box), c, box);
      EXPECT_EQ(crossed, time <= frame.expected_count(normalized)) << t << ' ' << normalized;
      EXPECT_EQ(crossed, oracle::all_pairs_crossing(c));
    }
  }
}

TEST(Coverage, ExactFormula) {
  const auto m = RadiusMixture::dirac(1.0);
  EXPECT_EQ(covered_fraction_exact(m, 0.0, 2), 0.0);
  EXPECT_NEAR(covered_fraction_exact(m, 1.0 / std::numbers::pi, 2), 1.0 - std::exp(-1.0), 1e-15);
  const auto two = RadiusMixture::parse("1:1,2:1");
  const double lambda = std::log(2.0) / (4.0 * std::numbers::pi / 3.0 * 9.0);
  EXPECT_NEAR(covered_fraction_exact(two, lambda, 3), 0.5, 1e-15);
}

TEST(Coverage, EmpiricalMatchesExact) {
  const auto m = RadiusMixture::parse("1:1,2:0.25");
  const BoxSpec box{2, 40.0};
  const double lambda = 0.1;
  const double exact = covered_fraction_exact(m, lambda, 2);
  const int seeds = 200;
  double sum = 0.0, sum2 = 0.0;
  for (int s = 0; s < seeds; ++s) {
    const auto c = sample(m, lambda, box, s);
    const double f = covered_fraction_empirical(c, box, 2000, s).fraction;
    sum += f;
    sum2 += f * f;
  }
  const double mean = sum / seeds;
  const double se = std::sqrt((sum2 / seeds - mean * mean) / (seeds - 1));
  EXPECT_NEAR(mean, exact, 3.0 * se);
  const auto single = sample(m, lambda, box, 3);
  const auto est = covered_fraction_empirical(single, box, 20000, 3);
  EXPECT_NEAR(est.fraction, exact, 4.0 * est.standard_error + 0.02);
}

TEST(Coverage, EmptyConfigurationIsUncovered) {
  const BoxSpec box{2, 10.0};
  const auto c = sample(RadiusMixture::dirac(1.0), 0.0, box, 1);
  EXPECT_EQ(covered_fraction_empirical(c, box, 1000, 1).fraction, 0.0);
}

TEST(Dump, RoundTrip) {
  const auto m = RadiusMixture::parse("0.5:1,1.25:0.3");
  const auto c = sample(m, 0.4, {3, 6.0}, 12);
  std::stringstream ss;
  write_configuration(ss, c);
  const auto dump = read_configuration(ss);
  EXPECT_EQ(dump.dimension, 3);
  EXPECT_EQ(dump.side, 6.0);
  EXPECT_EQ(dump.seed, 12u);
  ASSERT_EQ(dump.radii.size(), c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_EQ(dump.radii[i], c.radius(i));
    EXPECT_EQ(dump.centers[i], c.center(i));
  }
  std::stringstream bad("#other v1 d=2 L=1 seed=0\n");
  EXPECT_THROW(read_configuration(bad), InvalidArgument);
}
