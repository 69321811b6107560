#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "contperc/error.hpp"
#include "contperc/mixture.hpp"

using contperc::InvalidArgument;
using contperc::RadiusMixture;

TEST(Mixture, ParseSortsAtoms) {
  const auto m = RadiusMixture::parse("10:0.01,1:1");
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m.radius(0), 1.0);
  EXPECT_EQ(m.radius(1), 10.0);
  EXPECT_NEAR(m.weight(1), 0.01, 1e-17);
  EXPECT_NEAR(m.mass(), 1.01, 1e-15);
  EXPECT_EQ(m.max_radius(), 10.0);
  EXPECT_EQ(m.min_radius(), 1.0);
}

TEST(Mixture, ParseRejectsMalformedInput) {
  for (const char* text : {"", "1", "1:", ":1", "1:1,", "a:b", "1:1x", "1:0", "-1:1", "1:1,1:2"}) {
    EXPECT_THROW(RadiusMixture::parse(text), InvalidArgument) << text;
  }
}

TEST(Mixture, NormalizerAndMoments) {
  const auto m = RadiusMixture::from_weights({{1.0, 2.0}, {3.0, 0.5}});
  EXPECT_NEAR(m.normalizer(2), std::numbers::pi * (2.0 * 4.0 + 0.5 * 36.0), 1e-12);
  EXPECT_NEAR(std::exp(m.log_moment(3)), 2.0 + 0.5 * 27.0, 1e-12);
  const auto p = m.probabilities();
  EXPECT_NEAR(p[0], 0.8, 1e-15);
  EXPECT_NEAR(p[1], 0.2, 1e-15);
}

TEST(Mixture, TinyWeightsStayRepresentable) {
  std::vector<RadiusMixture::Atom> atoms{{1.0, 0.0}, {10.0, -2000.0 * std::log(10.0)}};
  const auto m = RadiusMixture::from_log_weights(atoms);
  EXPECT_NEAR(m.log_moment(2000), std::log(2.0), 1e-9);
}

TEST(Mixture, Scaling) {
  const auto m = RadiusMixture::parse("1:1,2:3");
  const auto s = m.scaled_radii(2.5);
  EXPECT_EQ(s.radius(1), 5.0);
  EXPECT_NEAR(s.normalizer(3), m.normalizer(3) * std::pow(2.5, 3), 1e-9);
  EXPECT_NEAR(m.scaled_mass(2.0).mass(), 8.0, 1e-14);
  EXPECT_THROW(m.scaled_radii(0.0), InvalidArgument);
}

TEST(Mixture, RoundTripsThroughText) {
  const auto m = RadiusMixture::parse("0.1:100,1:1");
  const auto again = RadiusMixture::parse(m.to_string());
  ASSERT_EQ(again.size(), m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    EXPECT_EQ(again.radius(i), m.radius(i));
    EXPECT_NEAR(again.weight(i), m.weight(i), 1e-13 * m.weight(i));
  }
}
