#pragma once

// Log-space special functions: log-gamma, log-beta and the regularized
// incomplete beta function. Everything returns logarithms so that ratios
// of ball volumes in dimension ~10^3 stay representable.

#include <cmath>
#include <limits>
#include <numbers>

#include "contperc/error.hpp"

namespace contperc::special {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// ln Γ(x) for x > 0. Lanczos (g = 7, 9 terms) for small arguments and the
/// Stirling series once x is large enough that it is the more accurate of
/// the two.
inline double log_gamma(double x) {
  require(x > 0.0, "log_gamma: argument must be positive");
  if (x < 0.5) {
    // Reflection keeps the Lanczos sum in its accurate range.
    return std::log(std::numbers::pi / std::sin(std::numbers::pi * x)) - log_gamma(1.0 - x);
  }
  if (x >= 20.0) {
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // Bernoulli terms B_{2n} / (2n (2n-1) x^{2n-1}) up to n = 6.
    const double series =
        inv * (1.0 / 12.0 -
               inv2 * (1.0 / 360.0 -
                       inv2 * (1.0 / 1260.0 -
                               inv2 * (1.0 / 1680.0 - inv2 * (1.0 / 1188.0 - inv2 * (691.0 / 360360.0))))));
    return (x - 0.5) * std::log(x) - x + 0.5 * std::log(2.0 * std::numbers::pi) + series;
  }
  static constexpr double kCoef[9] = {0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
                                      771.32342877765313,   -176.61502916214059,   12.507343278686905,
                                      -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
  const double z = x - 1.0;
  double acc = kCoef[0];
  for (int i = 1; i < 9; ++i) acc += kCoef[i] / (z + i);
  const double t = z + 7.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t + std::log(acc);
}

inline double log_beta(double p, double q) { return log_gamma(p) + log_gamma(q) - log_gamma(p + q); }

/// ln(e^a - e^b) for a >= b.
inline double log_diff_exp(double a, double b) {
  if (b == kNegInf) return a;
  if (b >= a) return kNegInf;
  return a + std::log1p(-std::exp(b - a));
}

/// ln(1 + e^x) without overflow.
inline double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

namespace detail {

// Continued fraction for I_x(p, q) (modified Lentz). Converges quickly
// for x < (p + 1) / (p + q + 2).
inline double beta_continued_fraction(double p, double q, double x) {
  constexpr double kTiny = 1e-300;
  constexpr double kTol = 1e-15;
  const int max_iter = 2000 + static_cast<int>(20.0 * std::sqrt(p + q));
  const double qab = p + q;
  const double qap = p + 1.0;
  const double qam = p - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (q - m) * x / ((qam + m2) * (p + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(p + m) * (qab + m) * x / ((p + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kTol) return h;
  }
  return h;
}

// ln I_x(p, q) by the direct continued fraction. y = 1 - x supplied by the
// caller so that no precision is lost when x is close to 1.
inline double log_ibeta_direct(double p, double q, double x, double y) {
  const double front = p * std::log(x) + q * std::log(y) - log_beta(p, q) - std::log(p);
  return front + std::log(beta_continued_fraction(p, q, x));
}

}  // namespace detail

/// ln I_x(p, q), the log of the regularized incomplete beta function.
/// `y` must equal 1 - x; pass it separately when it is known exactly.
inline double log_ibeta(double p, double q, double x, double y) {
  require(p > 0.0 && q > 0.0, "log_ibeta: shape parameters must be positive");
  require(x >= 0.0 && y >= 0.0, "log_ibeta: x must lie in [0, 1]");
  if (x <= 0.0) return kNegInf;
  if (y <= 0.0) return 0.0;
  if (x < (p + 1.0) / (p + q + 2.0)) return detail::log_ibeta_direct(p, q, x, y);
  const double complement = detail::log_ibeta_direct(q, p, y, x);
  return std::log1p(-std::exp(complement));
}

inline double log_ibeta(double p, double q, double x) { return log_ibeta(p, q, x, 1.0 - x); }

}  // namespace contperc::special
