#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "contperc/error.hpp"
#include "contperc/pathcount.hpp"

using namespace contperc;
using namespace contperc::pathcount;

namespace {

double dist(const double* x, const double* y, int d) {
  double s = 0.0;
  for (int j = 0; j < d; ++j) s += (x[j] - y[j]) * (x[j] - y[j]);
  return std::sqrt(s);
}

// Nested-loop enumeration of admissible tuples for k <= 3.
ChainCounts brute_force(const PathSample& s, double rho, int k) {
  const int d = s.d;
  const std::vector<double> origin(d, 0.0);
  ChainCounts out;
  std::set<std::size_t> ends;
  const std::size_t nu = s.unit_count();
  auto finish = [&](std::size_t last) {
    for (std::size_t e = 0; e < s.large_count(); ++e) {
      if (dist(s.unit_point(last), s.large_point(e), d) < 1.0 + rho) {
        ++out.tuples;
        ends.insert(e);
      }
    }
  };
  for (std::size_t a = 0; a < nu; ++a) {
    if (dist(s.unit_point(a), origin.data(), d) >= 1.0 + rho) continue;
    if (k == 1) {
      finish(a);
      continue;
    }
    for (std::size_t b = 0; b < nu; ++b) {
      if (b == a || dist(s.unit_point(a), s.unit_point(b), d) >= 2.0) continue;
      if (k == 2) {
        finish(b);
        continue;
      }
      for (std::size_t c = 0; c < nu; ++c) {
        if (c == a || c == b || dist(s.unit_point(b), s.unit_point(c), d) >= 2.0) continue;
        finish(c);
      }
    }
  }
  out.endpoints = ends.size();
  return out;
}

}  // namespace

TEST(TupleExpectation, ClosedForms) {
  EXPECT_NEAR(tuple_expectation_exact(4, 3.0, 0.7, 0), std::pow(0.7, 4), 1e-14);
  for (int d : {1, 2, 5}) {
    const double expected = std::pow(0.6, 2 * d) * std::pow(9.0 / 8.0, d);
    EXPECT_NEAR(tuple_expectation_exact(d, 2.0, 0.6, 1), expected, 1e-13 * expected);
  }
  EXPECT_NEAR(tuple_expectation_exact(2, 2.0, 0.5, 2), std::pow(0.5, 6) * std::pow(9.0 / 8.0, 2), 1e-15);
  EXPECT_NEAR(tuple_expectation_exact(2, 2.0, 0.5, 2), 0.019775, 1e-6);
  for (int k = 1; k <= 4; ++k) {
    EXPECT_NEAR(tuple_expectation_exact(3, 4.0, 0.8, k), gw_bound(3, 4.0, 0.8, k),
                1e-12 * gw_bound(3, 4.0, 0.8, k));
  }
}

TEST(Sampling, PointsInsideDomain) {
  const auto s = sample_points(3, 2.0, 0.9, 8.0, 1, 0);
  for (std::size_t i = 0; i < s.unit_count(); ++i) {
    double n = 0.0;
    for (int j = 0; j < 3; ++j) n += s.unit_point(i)[j] * s.unit_point(i)[j];
    EXPECT_LT(std::sqrt(n), 8.0);
  }
}

TEST(Counting, MatchesNestedLoops) {
  for (int k = 1; k <= 3; ++k) {
    for (std::uint64_t t = 0; t < 30; ++t) {
      const auto s = sample_points(2, 2.0, 0.9, domain_radius(2.0, k), 17, t);
      const auto fast = count_chains(s, 2.0, k);
      const auto slow = brute_force(s, 2.0, k);
      EXPECT_EQ(fast.tuples, slow.tuples) << k << ' ' << t;
      EXPECT_EQ(fast.endpoints, slow.endpoints) << k << ' ' << t;
      EXPECT_LE(fast.endpoints, fast.tuples);
    }
  }
}

TEST(Counting, ZeroLengthCountsNearbyLargePoints) {
  const auto s = sample_points(2, 3.0, 0.8, 6.0, 2, 0);
  const auto c = count_chains(s, 3.0, 0);
  EXPECT_EQ(c.endpoints, c.tuples);
  EXPECT_EQ(c.tuples, s.large_count());
}

TEST(Counting, SlicesPartitionTuples) {
  for (int k = 1; k <= 3; ++k) {
    for (int slices : {1, 3, 10}) {
      for (std::uint64_t t = 0; t < 20; ++t) {
        const auto s = sample_points(3, 2.0, 1.0, domain_radius(2.0, k), 23, t);
        const auto whole = count_chains(s, 2.0, k);
        std::uint64_t tuples = 0, endpoints = 0;
        for (const auto& [key, c] : slice_counts(s, 2.0, k, slices)) {
          ASSERT_EQ(key.size(), static_cast<std::size_t>(k));
          for (int n : key) {
            EXPECT_GE(n, 0);
            EXPECT_LT(n, slices);
          }
          tuples += c.tuples;
          endpoints += c.endpoints;
        }
        EXPECT_EQ(tuples, whole.tuples);
        EXPECT_LE(whole.endpoints, endpoints);
      }
    }
  }
}

TEST(MonteCarlo, ExactOracleAgreement) {
  for (int d : {2, 3}) {
    for (int k : {0, 1, 2}) {
      const auto r = count_paths(d, 2.0, 0.7, k, 40000, 5);
      EXPECT_NEAR(r.mean_M, r.exact_M, 3.0 * r.se_M) << d << ' ' << k;
      EXPECT_LE(r.mean_N, r.gw_bound + 3.0 * r.se_N) << d << ' ' << k;
      EXPECT_LE(r.mean_N, r.mean_M);
    }
  }
}

TEST(MonteCarlo, ZeroLengthMean) {
  const auto r = count_paths(2, 2.0, 0.8, 0, 10000, 1);
  EXPECT_NEAR(r.mean_N, 0.64, 3.0 * r.se_N);
  EXPECT_EQ(r.domain_radius, 4.0);
}

TEST(MonteCarlo, IndependentOfThreadCount) {
  const auto a = count_paths(2, 3.0, 0.8, 2, 3000, 9, 1);
  const auto b = count_paths(2, 3.0, 0.8, 2, 3000, 9, 3);
  EXPECT_EQ(a.mean_M, b.mean_M);
  EXPECT_EQ(a.se_N, b.se_N);
}

TEST(MonteCarlo, Preconditions) {
  EXPECT_THROW(count_paths(7, 2.0, 0.5, 1, 100, 1), InvalidArgument);
  EXPECT_THROW(count_paths(2, 2.0, 0.5, 5, 100, 1), InvalidArgument);
  EXPECT_THROW(count_paths(2, 1.0, 0.5, 1, 100, 1), InvalidArgument);
  try {
    count_paths(6, 200.0, 0.99, 1, 100, 1);
    FAIL() << "expected a capacity error";
  } catch (const CapacityError& e) {
    EXPECT_NE(std::string(e.what()).find("expected point count"), std::string::npos);
  }
}
