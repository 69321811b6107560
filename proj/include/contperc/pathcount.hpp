#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "contperc/error.hpp"
#include "contperc/geometry.hpp"
#include "contperc/parallel.hpp"
#include "contperc/rng.hpp"

namespace contperc::pathcount {

inline constexpr int kMaxDimension = 6;
inline constexpr int kMaxDepth = 4;
inline constexpr double kMaxExpectedPoints = 1e6;

struct PathCountRun {
  int d = 2;
  double rho = 2.0;
  double kappa = 0.5;
  int k = 0;
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
  double domain_radius = 0.0;
  double mean_N = 0.0;
  double se_N = 0.0;
  double mean_M = 0.0;
  double se_M = 0.0;
  double exact_M = 0.0;
  double gw_bound = 0.0;
};

/// Points of the two Poisson processes inside B(0, domain_radius), stored
/// flat with stride d.
struct PathSample {
  int d = 2;
  std::vector<double> unit;
  std::vector<double> large;

  std::size_t unit_count() const { return unit.size() / d; }
  std::size_t large_count() const { return large.size() / d; }
  const double* unit_point(std::size_t i) const { return unit.data() + i * d; }
  const double* large_point(std::size_t i) const { return large.data() + i * d; }
};

struct ChainCounts {
  std::uint64_t endpoints = 0;  // N_k
  std::uint64_t tuples = 0;     // M_k
};

/// ln lambda_1 = ln(kappa^d / (v_d 2^d)).
inline double log_unit_intensity(int d, double kappa) {
  return d * std::log(kappa) - geometry::log_ball_volume(d, 2.0);
}

inline double log_large_intensity(int d, double rho, double kappa) {
  return log_unit_intensity(d, kappa) - d * std::log(rho);
}

/// Smallest radius containing every point that can contribute at depth k.
inline double domain_radius(double rho, int k) { return k == 0 ? 2.0 * rho : 2.0 * rho + 2.0 * k; }

inline void validate(int d, double rho, double kappa, int k) {
  require(d >= 1, "dimension must be at least 1");
  require(std::isfinite(rho) && rho > 1.0, "rho must exceed 1");
  require(std::isfinite(kappa) && kappa > 0.0, "kappa must be positive");
  require(k >= 0, "k must be non-negative");
}

/// Expected M_k, in log space.
inline double log_tuple_expectation_exact(int d, double rho, double kappa, int k) {
  validate(d, rho, kappa, k);
  if (k == 0) return d * std::log(kappa);
  const double l1 = log_unit_intensity(d, kappa);
  const double lr = log_large_intensity(d, rho, kappa);
  const double link = geometry::log_ball_volume(d, 1.0 + rho);
  return k * l1 + lr + 2.0 * link + (k - 1) * geometry::log_ball_volume(d, 2.0);
}

inline double tuple_expectation_exact(int d, double rho, double kappa, int k) {
  return std::exp(log_tuple_expectation_exact(d, rho, kappa, k));
}

/// (kappa^{k+1} (1+rho)^2 / (4 rho))^d; for k = 0 this is E N_0 = kappa^d.
inline double gw_bound(int d, double rho, double kappa, int k) {
  validate(d, rho, kappa, k);
  if (k == 0) return std::pow(kappa, d);
  return std::exp(d * ((k + 1) * std::log(kappa) + 2.0 * std::log1p(rho) - std::log(4.0 * rho)));
}

namespace detail {

inline double distance_sq(const double* x, const double* y, int d) {
  double s = 0.0;
  for (int j = 0; j < d; ++j) {
    const double t = x[j] - y[j];
    s += t * t;
  }
  return s;
}

inline double norm_sq(const double* x, int d) {
  double s = 0.0;
  for (int j = 0; j < d; ++j) s += x[j] * x[j];
  return s;
}

inline void fill_ball(rng::Stream& gen, int d, double radius, double mean, std::vector<double>& out) {
  const std::uint64_t n = gen.poisson(mean);
  out.resize(n * d);
  for (std::uint64_t i = 0; i < n; ++i) {
    double* x = out.data() + i * d;
    double len = 0.0;
    do {
      len = 0.0;
      for (int j = 0; j < d; ++j) {
        x[j] = gen.normal();
        len += x[j] * x[j];
      }
    } while (len == 0.0);
    const double scale = radius * std::pow(gen.uniform(), 1.0 / d) / std::sqrt(len);
    for (int j = 0; j < d; ++j) x[j] *= scale;
  }
}

/// Slab index of a step from `from` to `to` of reach r, oriented along
/// from / |from|: 0 for t <= 1/slices, else ceil(t slices) - 1.
inline int slab_index(const double* from, const double* to, int d, double reach, int slices) {
  const double len = std::sqrt(norm_sq(from, d));
  double dot = 0.0;
  for (int j = 0; j < d; ++j) dot += (to[j] - from[j]) * from[j];
  const double t = len > 0.0 ? dot / (len * reach) : 0.0;
  if (t * slices <= 1.0) return 0;
  return std::min(slices - 1, static_cast<int>(std::ceil(t * slices)) - 1);
}

/// Enumerates every admissible tuple (x_1..x_k distinct unit points, x_{k+1}
/// a large point) and calls visit(path, endpoint) with unit indices.
template <class Visit>
void for_each_chain(const PathSample& s, double rho, int k, Visit&& visit) {
  const int d = s.d;
  const std::size_t nu = s.unit_count();
  const std::size_t nl = s.large_count();
  std::vector<std::size_t> path;
  if (k == 0) {
    const double reach_sq = 4.0 * rho * rho;
    for (std::size_t e = 0; e < nl; ++e)
      if (norm_sq(s.large_point(e), d) < reach_sq) visit(path, e);
    return;
  }
  const double link_sq = (1.0 + rho) * (1.0 + rho);
  std::vector<std::vector<std::uint32_t>> unit_adj(nu);
  std::vector<std::vector<std::uint32_t>> large_adj(nu);
  for (std::size_t i = 0; i < nu; ++i) {
    for (std::size_t j = i + 1; j < nu; ++j) {
      if (distance_sq(s.unit_point(i), s.unit_point(j), d) < 4.0) {
        unit_adj[i].push_back(static_cast<std::uint32_t>(j));
        unit_adj[j].push_back(static_cast<std::uint32_t>(i));
      }
    }
    for (std::size_t e = 0; e < nl; ++e)
      if (distance_sq(s.unit_point(i), s.large_point(e), d) < link_sq) large_adj[i].push_back(static_cast<std::uint32_t>(e));
  }
  std::vector<char> on_path(nu, 0);
  auto extend = [&](auto&& self, std::size_t last) -> void {
    if (static_cast<int>(path.size()) == k) {
      for (std::uint32_t e : large_adj[last]) visit(path, e);
      return;
    }
    for (std::uint32_t next : unit_adj[last]) {
      if (on_path[next]) continue;
      on_path[next] = 1;
      path.push_back(next);
      self(self, next);
      path.pop_back();
      on_path[next] = 0;
    }
  };
  for (std::size_t first = 0; first < nu; ++first) {
    if (norm_sq(s.unit_point(first), d) >= link_sq) continue;
    on_path[first] = 1;
    path.push_back(first);
    extend(extend, first);
    path.pop_back();
    on_path[first] = 0;
  }
}

}  // namespace detail

/// Draws trial `trial` of the two processes in B(0, radius).
inline PathSample sample_points(int d, double rho, double kappa, double radius, std::uint64_t seed, std::uint64_t trial) {
  PathSample s;
  s.d = d;
  const double log_vol = geometry::log_ball_volume(d, radius);
  rng::Stream gen(seed, rng::stream_id(rng::Purpose::kPaths, trial));
  detail::fill_ball(gen, d, radius, std::exp(log_unit_intensity(d, kappa) + log_vol), s.unit);
  detail::fill_ball(gen, d, radius, std::exp(log_large_intensity(d, rho, kappa) + log_vol), s.large);
  return s;
}

inline ChainCounts count_chains(const PathSample& s, double rho, int k) {
  ChainCounts out;
  std::vector<char> reached(s.large_count(), 0);
  detail::for_each_chain(s, rho, k, [&](const std::vector<std::size_t>&, std::size_t e) {
    ++out.tuples;
    if (!reached[e]) {
      reached[e] = 1;
      ++out.endpoints;
    }
  });
  return out;
}

/// Chain counts split by the slab index of steps 2..k+1. Unit steps have
/// reach 2 and the final step reach 1 + rho. Keys have k entries.
inline std::map<std::vector<int>, ChainCounts> slice_counts(const PathSample& s, double rho, int k, int slices) {
  require(k >= 1, "slicing needs k >= 1");
  require(slices >= 1, "slice count must be positive");
  std::map<std::vector<int>, ChainCounts> out;
  std::map<std::vector<int>, std::set<std::size_t>> ends;
  std::vector<int> key(k);
  detail::for_each_chain(s, rho, k, [&](const std::vector<std::size_t>& path, std::size_t e) {
    for (int i = 1; i < k; ++i)
      key[i - 1] = detail::slab_index(s.unit_point(path[i - 1]), s.unit_point(path[i]), s.d, 2.0, slices);
    key[k - 1] = detail::slab_index(s.unit_point(path[k - 1]), s.large_point(e), s.d, 1.0 + rho, slices);
    ++out[key].tuples;
    ends[key].insert(e);
  });
  for (auto& [slice, counts] : out) counts.endpoints = ends[slice].size();
  return out;
}

/// Monte Carlo means and standard errors of N_k and M_k over `trials`
/// independent samples; trial t uses its own stream.
inline PathCountRun count_paths(int d, double rho, double kappa, int k, std::uint64_t trials, std::uint64_t seed,
                                unsigned threads = 0) {
  validate(d, rho, kappa, k);
  require(d <= kMaxDimension, "path counting supports d <= " + std::to_string(kMaxDimension));
  require(k <= kMaxDepth, "path counting supports k <= " + std::to_string(kMaxDepth));
  require(trials >= 2, "need at least 2 trials");

  PathCountRun run;
  run.d = d;
  run.rho = rho;
  run.kappa = kappa;
  run.k = k;
  run.trials = trials;
  run.seed = seed;
  run.domain_radius = domain_radius(rho, k);
  const double log_vol = geometry::log_ball_volume(d, run.domain_radius);
  const double expected_unit = std::exp(log_unit_intensity(d, kappa) + log_vol);
  const double expected_large = std::exp(log_large_intensity(d, rho, kappa) + log_vol);
  if (expected_unit > kMaxExpectedPoints || expected_large > kMaxExpectedPoints)
    throw CapacityError("expected point count " + std::to_string(std::max(expected_unit, expected_large)) +
                        " per trial exceeds " + std::to_string(kMaxExpectedPoints));

  std::vector<ChainCounts> per_trial(trials);
  parallel_for(trials, threads, [&](std::size_t t) {
    per_trial[t] = count_chains(sample_points(d, rho, kappa, run.domain_radius, seed, t), rho, k);
  });

  auto summarize = [&](auto field, double& mean, double& se) {
    double m = 0.0;
    double m2 = 0.0;
    for (std::size_t t = 0; t < per_trial.size(); ++t) {
      const double x = static_cast<double>(field(per_trial[t]));
      const double delta = x - m;
      m += delta / static_cast<double>(t + 1);
      m2 += delta * (x - m);
    }
    mean = m;
    se = std::sqrt(m2 / static_cast<double>(trials - 1) / static_cast<double>(trials));
  };
  summarize([](const ChainCounts& c) { return c.endpoints; }, run.mean_N, run.se_N);
  summarize([](const ChainCounts& c) { return c.tuples; }, run.mean_M, run.se_M);
  run.exact_M = tuple_expectation_exact(d, rho, kappa, k);
  run.gw_bound = gw_bound(d, rho, kappa, k);
  return run;
}

}  // namespace contperc::pathcount
