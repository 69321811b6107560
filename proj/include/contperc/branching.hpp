#pragma once

// Two-type Galton-Watson process attached to the radius-1 / radius-rho
// Boolean model with intensities kappa^d / (v_d 2^d) and
// kappa^d / (v_d 2^d rho^d). Offspring means form the matrix
//   M_d = kappa^d [[1, ((1+rho)/(2 rho))^d], [((1+rho)/2)^d, 1]],
// kept in log space since ((1+rho)/2)^d overflows long before d = 1000.

#include <array>
#include <cmath>

#include "contperc/error.hpp"
#include "contperc/special.hpp"

namespace contperc::branching {

struct MeanMatrix {
  int dimension = 1;
  double kappa = 1.0;
  double rho = 2.0;
  /// ln of the entries, row-major: [0][1] is the mean number of radius-rho
  /// children of a radius-1 parent.
  std::array<std::array<double, 2>, 2> log_entries{};

  double entry(int row, int col) const { return std::exp(log_entries[row][col]); }
};

inline MeanMatrix mean_matrix(int d, double kappa, double rho) {
  require(d >= 1, "dimension must be at least 1");
  require(std::isfinite(kappa) && kappa > 0.0, "kappa must be positive");
  require(std::isfinite(rho) && rho > 1.0, "rho must exceed 1");
  MeanMatrix m{d, kappa, rho, {}};
  const double base = d * std::log(kappa);
  m.log_entries[0][0] = base;
  m.log_entries[0][1] = base + d * (std::log1p(rho) - std::log(2.0 * rho));
  m.log_entries[1][0] = base + d * (std::log1p(rho) - std::log(2.0));
  m.log_entries[1][1] = base;
  return m;
}

/// ln of the growth ratio beta = (1 + rho) / (2 sqrt(rho)) > 1.
inline double log_growth_ratio(double rho) { return std::log1p(rho) - std::log(2.0) - 0.5 * std::log(rho); }

/// ln r_d, where r_d is the Perron root of M_d. Equal diagonal entries give
/// eigenvalues kappa^d (1 +- sqrt(product of off-diagonals)).
inline double log_perron_root(const MeanMatrix& m) {
  const double log_diag = m.log_entries[0][0];
  const double log_sqrt_offdiag = 0.5 * (m.log_entries[0][1] + m.log_entries[1][0]) - log_diag;
  return log_diag + special::softplus(log_sqrt_offdiag);
}

inline double perron_root(const MeanMatrix& m) { return std::exp(log_perron_root(m)); }

/// The kappa at which r_d = 1: (1 + beta^d)^{-1/d}.
inline double gw_critical_kappa(int d, double rho) {
  require(d >= 1, "dimension must be at least 1");
  require(std::isfinite(rho) && rho > 1.0, "rho must exceed 1");
  return std::exp(-special::softplus(d * log_growth_ratio(rho)) / d);
}

/// d -> infinity limit of gw_critical_kappa: 2 sqrt(rho) / (1 + rho).
inline double gw_critical_kappa_limit(double rho) {
  require(std::isfinite(rho) && rho > 1.0, "rho must exceed 1");
  return 2.0 * std::sqrt(rho) / (1.0 + rho);
}

}  // namespace contperc::branching
