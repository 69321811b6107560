#pragma once

// Minimax threshold constants for alternating radius-rho / radius-1 ball
// chains. For offsets a_2..a_{k+1} in [0, 1) the chain has a genealogy
// term (branching growth penalized by the slab offsets) and a geometry
// term (the last generation is confined to a ball of radius D(a)). The
// threshold for k-alternation is the infimum over offsets of the larger
// of the two terms; the overall threshold is the infimum over k.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "contperc/error.hpp"
#include "contperc/rng.hpp"

namespace contperc::thresholds {

inline constexpr int kMaxAlternation = 12;
inline constexpr int kDefaultKMax = 6;
/// Offsets are optimized over [0, kOffsetCap]; the genealogy term diverges at 1.
inline constexpr double kOffsetCap = 1.0 - 1e-9;

struct AlternationParams {
  double rho = 2.0;
  int k = 1;
  std::vector<double> offsets;  // a_2 .. a_{k+1}

  void validate() const {
    require(std::isfinite(rho) && rho > 1.0, "rho must exceed 1");
    require(k >= 1, "k must be at least 1");
    require(offsets.size() == static_cast<std::size_t>(k), "need exactly k offsets");
    for (double a : offsets) require(a >= 0.0 && a < 1.0, "offsets must lie in [0, 1)");
  }
};

/// Distances d_1 .. d_{k+1} of successive chain members from the origin.
struct DistanceProfile {
  std::vector<double> distances;
  double final_distance() const { return distances.back(); }
};

struct BranchValues {
  double genealogy = 0.0;
  double geometry = 0.0;
  double max() const { return std::max(genealogy, geometry); }
};

struct KappaResult {
  double rho = 0.0;
  double kappa = 0.0;
  std::vector<double> argmin_offsets;
  BranchValues branch_values;
  int k_used = 1;
  /// True when the minimum was taken over k = 1..k_max (kappa_c), false for a single k.
  bool over_all_k = false;
  /// For kappa_c: whether the lower envelope past k_max already exceeds the minimum.
  bool certified = true;
};

/// Chain step radius r_i for i = 1..k+1: 1 + rho at both ends, 2 in between.
inline double step_radius(double rho, int k, int i) { return (i == 1 || i == k + 1) ? 1.0 + rho : 2.0; }

inline DistanceProfile distance_profile(const AlternationParams& p) {
  p.validate();
  DistanceProfile out;
  out.distances.reserve(p.k + 1);
  double d = 1.0 + p.rho;
  out.distances.push_back(d);
  for (int i = 2; i <= p.k + 1; ++i) {
    const double r = step_radius(p.rho, p.k, i);
    const double a = p.offsets[i - 2];
    d = std::sqrt(d * d + 2.0 * r * a * d + r * r);
    out.distances.push_back(d);
  }
  return out;
}

/// ln of the k-th lower envelope (4 rho / (1 + rho)^2)^{1/(k+1)}.
inline double log_envelope(double rho, int k) {
  return (std::log(4.0 * rho) - 2.0 * std::log1p(rho)) / (k + 1);
}

inline double envelope(double rho, int k) { return std::exp(log_envelope(rho, k)); }

namespace detail {

inline BranchValues branch_values(double rho, int k, std::span<const double> offsets) {
  double log_slab_penalty = 0.0;
  double d = 1.0 + rho;
  for (int i = 2; i <= k + 1; ++i) {
    const double a = offsets[i - 2];
    log_slab_penalty += std::log1p(-a * a);
    const double r = step_radius(rho, k, i);
    d = std::sqrt(d * d + 2.0 * r * a * d + r * r);
  }
  BranchValues v;
  v.genealogy = std::exp(log_envelope(rho, k) - 0.5 * log_slab_penalty / (k + 1));
  v.geometry = 2.0 * rho / d;
  return v;
}

// Derivative-free minimizer of a function on the box [0, cap]^k. Points are
// projected onto the box before evaluation.
class BoxNelderMead {
 public:
  using Point = std::vector<double>;

  BoxNelderMead(double rho, int k) : rho_(rho), k_(k) {}

  double eval(Point& x) const {
    for (double& v : x) v = std::clamp(v, 0.0, kOffsetCap);
    return branch_values(rho_, k_, x).max();
  }

  /// Runs restarts from `start` until a restart stops improving.
  std::pair<Point, double> minimize(Point start, double initial_step) const {
    double best = eval(start);
    double step = initial_step;
    for (int restart = 0; restart < 60; ++restart) {
      auto [x, fx] = run(start, step);
      const double gain = best - fx;
      if (fx < best) {
        best = fx;
        start = std::move(x);
      }
      if (gain <= 1e-13) {
        step *= 0.25;
        if (step < 1e-10) break;
      }
    }
    return {start, best};
  }

 private:
  std::pair<Point, double> run(const Point& start, double step) const {
    const int n = k_;
    std::vector<Point> simplex(n + 1, start);
    std::vector<double> values(n + 1);
    for (int i = 0; i < n; ++i) {
      // Step inward when the start sits on the upper face.
      simplex[i + 1][i] += (start[i] + step <= kOffsetCap) ? step : -step;
    }
    for (int i = 0; i <= n; ++i) values[i] = eval(simplex[i]);

    const int max_iter = 400 * (n + 1);
    std::vector<int> order(n + 1);
    for (int iter = 0; iter < max_iter; ++iter) {
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](int a, int b) { return values[a] < values[b]; });
      const int best = order.front();
      const int worst = order.back();
      const int second = order[n > 0 ? n - 1 : 0];
      if (values[worst] - values[best] < 1e-14) break;

      Point centroid(n, 0.0);
      for (int i = 0; i <= n; ++i) {
        if (i == worst) continue;
        for (int j = 0; j < n; ++j) centroid[j] += simplex[i][j] / n;
      }
      auto along = [&](double t) {
        Point p(n);
        for (int j = 0; j < n; ++j) p[j] = centroid[j] + t * (simplex[worst][j] - centroid[j]);
        return p;
      };
      Point reflected = along(-1.0);
      const double fr = eval(reflected);
      if (fr < values[best]) {
        Point expanded = along(-2.0);
        const double fe = eval(expanded);
        if (fe < fr) {
          simplex[worst] = std::move(expanded);
          values[worst] = fe;
        } else {
          simplex[worst] = std::move(reflected);
          values[worst] = fr;
        }
        continue;
      }
      if (fr < values[second]) {
        simplex[worst] = std::move(reflected);
        values[worst] = fr;
        continue;
      }
      Point contracted = fr < values[worst] ? along(-0.5) : along(0.5);
      const double fc = eval(contracted);
      if (fc < std::min(fr, values[worst])) {
        simplex[worst] = std::move(contracted);
        values[worst] = fc;
        continue;
      }
      for (int i = 0; i <= n; ++i) {
        if (i == best) continue;
        for (int j = 0; j < n; ++j) simplex[i][j] = simplex[best][j] + 0.5 * (simplex[i][j] - simplex[best][j]);
        values[i] = eval(simplex[i]);
      }
    }
    const auto it = std::min_element(values.begin(), values.end());
    return {simplex[it - values.begin()], *it};
  }

  double rho_;
  int k_;
};

struct Candidate {
  std::vector<double> x;
  double value;
};

// Keeps the `limit` lowest candidates seen so far.
inline void offer(std::vector<Candidate>& pool, std::size_t limit, const std::vector<double>& x, double value) {
  if (pool.size() == limit && value >= pool.back().value) return;
  Candidate c{x, value};
  auto pos = std::upper_bound(pool.begin(), pool.end(), value,
                              [](double v, const Candidate& other) { return v < other.value; });
  pool.insert(pos, std::move(c));
  if (pool.size() > limit) pool.pop_back();
}

inline std::vector<Candidate> seed_points(double rho, int k, std::size_t keep) {
  std::vector<Candidate> pool;
  std::vector<double> x(k, 0.0);
  if (k <= 3) {
    constexpr int kSteps = 50;  // 0, 0.02, ..., 0.98
    std::vector<int> idx(k, 0);
    while (true) {
      for (int j = 0; j < k; ++j) x[j] = 0.02 * idx[j];
      offer(pool, keep, x, branch_values(rho, k, x).max());
      int j = 0;
      while (j < k && ++idx[j] == kSteps) idx[j++] = 0;
      if (j == k) break;
    }
    return pool;
  }
  // Latin hypercube: each coordinate visits every stratum once.
  const int samples = 500 * k;
  rng::Stream gen(0x6B6170706163ull, rng::stream_id(rng::Purpose::kSearch, static_cast<std::uint64_t>(k)));
  std::vector<std::vector<int>> strata(k, std::vector<int>(samples));
  for (auto& column : strata) {
    std::iota(column.begin(), column.end(), 0);
    for (int i = samples - 1; i > 0; --i) {
      const auto jdx = static_cast<int>(gen() % static_cast<std::uint64_t>(i + 1));
      std::swap(column[i], column[jdx]);
    }
  }
  for (int s = 0; s < samples; ++s) {
    for (int j = 0; j < k; ++j) x[j] = (strata[j][s] + gen.uniform()) / samples * kOffsetCap;
    offer(pool, keep, x, branch_values(rho, k, x).max());
  }
  // The all-zero corner is the optimum whenever genealogy dominates.
  std::fill(x.begin(), x.end(), 0.0);
  offer(pool, keep, x, branch_values(rho, k, x).max());
  return pool;
}

}  // namespace detail

/// Genealogy and geometry terms of the minimax functional at the given offsets.
inline BranchValues objective(const AlternationParams& p) {
  p.validate();
  return detail::branch_values(p.rho, p.k, p.offsets);
}

/// Threshold for k-alternating chains: infimum over offsets of the larger branch.
inline KappaResult kappa_c_k(double rho, int k) {
  require(std::isfinite(rho) && rho > 1.0, "rho must exceed 1");
  require(k >= 1, "k must be at least 1");
  if (k > kMaxAlternation) {
    throw CapacityError("k = " + std::to_string(k) + " exceeds the supported maximum of " +
                        std::to_string(kMaxAlternation));
  }
  const auto seeds = detail::seed_points(rho, k, 4);
  const detail::BoxNelderMead minimizer(rho, k);
  std::vector<double> best_x;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& seed : seeds) {
    auto [x, fx] = minimizer.minimize(seed.x, 0.02);
    if (fx < best) {
      best = fx;
      best_x = std::move(x);
    }
  }
  KappaResult out;
  out.rho = rho;
  out.k_used = k;
  out.argmin_offsets = best_x;
  out.branch_values = detail::branch_values(rho, k, best_x);
  out.kappa = out.branch_values.max();
  out.certified = true;
  return out;
}

/// Overall threshold: minimum of kappa_c_k over k = 1..k_max. The result is
/// certified when the lower envelope at k_max + 1 (which only grows with k)
/// already exceeds the minimum, so no larger k can win.
inline KappaResult kappa_c(double rho, int k_max = kDefaultKMax) {
  require(std::isfinite(rho) && rho > 1.0, "rho must exceed 1");
  require(k_max >= 1, "k_max must be at least 1");
  if (k_max > kMaxAlternation) {
    throw CapacityError("k_max = " + std::to_string(k_max) + " exceeds the supported maximum of " +
                        std::to_string(kMaxAlternation));
  }
  KappaResult best = kappa_c_k(rho, 1);
  for (int k = 2; k <= k_max; ++k) {
    // kappa_c_k(rho, k) >= envelope(rho, k); skip what cannot win.
    if (envelope(rho, k) >= best.kappa) continue;
    KappaResult r = kappa_c_k(rho, k);
    if (r.kappa < best.kappa) best = std::move(r);
  }
  best.over_all_k = true;
  best.certified = envelope(rho, k_max + 1) > best.kappa;
  return best;
}

/// Closed form of the k = 1 threshold: 2 sqrt(rho) / (1 + rho) up to rho = 2,
/// sqrt(4 + rho^2) / (1 + rho) from there on.
inline double kappa_c1_closed_form(double rho) {
  require(std::isfinite(rho) && rho > 1.0, "rho must exceed 1");
  if (rho <= 2.0) return 2.0 * std::sqrt(rho) / (1.0 + rho);
  return std::sqrt(4.0 + rho * rho) / (1.0 + rho);
}

/// Offset at which the k = 1 branches cross when rho >= 2.
inline double kappa_c1_argmin(double rho) {
  require(std::isfinite(rho) && rho > 1.0, "rho must exceed 1");
  if (rho <= 2.0) return 0.0;
  return (rho * rho - 4.0) / (rho * rho + 4.0);
}

/// Smallest rho in [lo, hi] (to `tol`) where kappa_c_k(rho, k) drops below
/// kappa_c_k(rho, 1), or NaN when it never does on the scan grid. A numerical
/// locator only; it is not a proven constant.
inline double alternation_crossover(int k, double lo = 2.0, double hi = 20.0, double tol = 1e-6) {
  require(k >= 2, "crossover needs k >= 2");
  require(lo > 1.0 && hi > lo, "need 1 < lo < hi");
  auto gap = [k](double rho) { return kappa_c_k(rho, k).kappa - kappa_c_k(rho, 1).kappa; };
  constexpr int kScan = 72;
  double prev = lo;
  bool found = false;
  for (int i = 1; i <= kScan; ++i) {
    const double rho = lo + (hi - lo) * i / kScan;
    if (gap(rho) < -1e-9) {
      hi = rho;
      lo = prev;
      found = true;
      break;
    }
    prev = rho;
  }
  if (!found) return std::numeric_limits<double>::quiet_NaN();
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (gap(mid) < -1e-9 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace contperc::thresholds
