#pragma once

// Volumes of balls and of the slabs {y in B(0, r) : a r < y_1 <= b r} in
// arbitrary dimension, exact (via the incomplete beta function) and in
// log form.

#include <cmath>
#include <numbers>
#include <string>

#include "contperc/error.hpp"
#include "contperc/special.hpp"

namespace contperc::geometry {

/// ln v_d, with v_d = pi^{d/2} / Gamma(d/2 + 1) the unit-ball volume. d = 0 gives 0.
inline double log_unit_ball_volume(int d) {
  require(d >= 0, "dimension must be non-negative");
  if (d == 0) return 0.0;
  return 0.5 * d * std::log(std::numbers::pi) - special::log_gamma(0.5 * d + 1.0);
}

inline double unit_ball_volume(int d) {
  require(d >= 1, "unit_ball_volume: dimension must be at least 1");
  return std::exp(log_unit_ball_volume(d));
}

/// ln of the volume of a radius-r ball in dimension d.
inline double log_ball_volume(int d, double r) { return log_unit_ball_volume(d) + d * std::log(r); }

/// Slab of a radius-r ball cut by two hyperplanes orthogonal to the first
/// axis. For lower > 0 the slab is {a r < y_1 <= b r}; for lower == 0 it is
/// the whole half-ball side {y_1 <= b r}, so that slabs over a partition
/// 0 = t_0 < t_1 < ... < t_N = 1 tile the ball exactly.
struct SlabSpec {
  int dimension = 1;
  double radius = 1.0;
  double lower = 0.0;
  double upper = 1.0;

  void validate() const {
    require(dimension >= 1, "slab: dimension must be at least 1");
    require(radius > 0.0 && std::isfinite(radius), "slab: radius must be positive");
    require(lower >= 0.0 && lower < 1.0, "slab: lower must lie in [0, 1)");
    require(upper > lower && upper <= 1.0, "slab: upper must lie in (lower, 1]");
  }
};

namespace detail {

// ln( |{y in B(0,1) : y_1 > t}| / v_d ) for t in [0, 1]: the cap fraction
// (1/2) I_{1 - t^2}((d + 1)/2, 1/2).
inline double log_cap_fraction(int d, double t) {
  if (t >= 1.0) return special::kNegInf;
  const double x = (1.0 - t) * (1.0 + t);
  return std::log(0.5) + special::log_ibeta(0.5 * (d + 1), 0.5, x, t * t);
}

}  // namespace detail

/// ln( slab_volume / (v_d r^d) ), the fraction of the ball occupied by the slab.
inline double log_slab_fraction(const SlabSpec& s) {
  s.validate();
  const double upper_cap = detail::log_cap_fraction(s.dimension, s.upper);
  if (s.lower == 0.0) return std::log1p(-std::exp(upper_cap));
  return special::log_diff_exp(detail::log_cap_fraction(s.dimension, s.lower), upper_cap);
}

inline double log_slab_volume(const SlabSpec& s) {
  return log_slab_fraction(s) + log_ball_volume(s.dimension, s.radius);
}

inline double slab_volume(const SlabSpec& s) { return std::exp(log_slab_volume(s)); }

/// (1/d) ln(|slab| / v_d). Tends to ln(r sqrt(1 - a^2)) as d grows.
inline double slab_log_rate(const SlabSpec& s) {
  return (log_slab_fraction(s) + s.dimension * std::log(s.radius)) / s.dimension;
}

/// The d -> infinity limit of slab_log_rate.
inline double slab_log_rate_limit(const SlabSpec& s) {
  s.validate();
  return std::log(s.radius) + 0.5 * std::log1p(-s.lower * s.lower);
}

/// Cylinder bound: |slab| / r^d <= v_{d-1} (1 - a^2)^{(d-1)/2} (1 - a). Needs a > 0, d >= 2.
inline double log_slab_upper_bound(const SlabSpec& s) {
  s.validate();
  const int d = s.dimension;
  require(d >= 2 && s.lower > 0.0, "slab bounds need d >= 2 and lower > 0");
  const double a = s.lower;
  return d * std::log(s.radius) + log_unit_ball_volume(d - 1) + 0.5 * (d - 1) * std::log1p(-a * a) +
         std::log1p(-a);
}

/// Truncated-cone bound: |slab| / r^d >= v_{d-1} (1 - a^2)^{(d-1)/2} (b - a) / d.
inline double log_slab_lower_bound(const SlabSpec& s) {
  s.validate();
  const int d = s.dimension;
  require(d >= 2 && s.lower > 0.0, "slab bounds need d >= 2 and lower > 0");
  const double a = s.lower;
  return d * std::log(s.radius) + log_unit_ball_volume(d - 1) + 0.5 * (d - 1) * std::log1p(-a * a) +
         std::log(s.upper - a) - std::log(static_cast<double>(d));
}

}  // namespace contperc::geometry
