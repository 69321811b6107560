#pragma once

// Monte Carlo estimation of percolation thresholds of Boolean models.
//
// The finite-box pseudo-critical point is the intensity at which a
// face-to-face crossing cluster appears with probability 1/2. It is found
// by bisection in the normalized intensity lambda * v_d * sum_i w_i (2 r_i)^d,
// with Wilson intervals deciding each branch. Each trial owns one ball
// stream shared by every bisection level, so the crossing indicator of a
// trial is monotone in the intensity and is read off from the arrival time
// at which the trial first crosses.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "contperc/boolean_model.hpp"
#include "contperc/error.hpp"
#include "contperc/mixture.hpp"
#include "contperc/parallel.hpp"

namespace contperc::estimation {

inline constexpr int kMaxSimulationDimension = 6;
inline constexpr int kMinTrials = 50;
inline constexpr double kWilsonZ95 = 1.959963984540054;

struct WilsonInterval {
  double low = 0.0;
  double high = 1.0;
};

inline WilsonInterval wilson_interval(std::int64_t successes, std::int64_t trials, double z = kWilsonZ95) {
  require(trials > 0 && successes >= 0 && successes <= trials, "wilson: need 0 <= successes <= trials, trials > 0");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

struct BisectionLevel {
  double intensity = 0.0;
  std::int64_t successes = 0;
  std::int64_t trials = 0;
  WilsonInterval interval;

  double fraction() const { return static_cast<double>(successes) / static_cast<double>(trials); }
};

struct BisectionOptions {
  double target_rel_tol = 0.02;
  double initial_low = 1.0;
  double initial_high = 8.0;
  int max_expansions = 30;
  int max_levels = 80;
  /// Bisection steps spent on each end of the reported interval.
  int interval_refinements = 16;
};

struct BisectionResult {
  /// Intensity where the crossing fraction reaches 1/2 (interpolated).
  double estimate = 0.0;
  /// Largest intensity whose Wilson interval lies below 1/2 and smallest
  /// one whose interval lies above it.
  double low = 0.0;
  double high = 0.0;
  /// True when the search stopped because both ends of the working bracket
  /// were statistically indistinguishable from crossing probability 1/2.
  bool resolution_limited = false;
  std::vector<BisectionLevel> history;
};

using ProgressFn = std::function<void(const BisectionLevel& level, double low, double high)>;

/// Bisection for the intensity at which probe(intensity) / trials crosses
/// 1/2. `probe` returns the number of successes out of `trials`.
///
/// The working bracket follows the point estimate of each midpoint and
/// stops when it is narrower than the target or when both of its ends have
/// Wilson intervals straddling 1/2 (finer midpoints cannot be resolved with
/// this many trials). The reported interval is the range of intensities not
/// statistically distinguishable from 1/2: its ends are located by a second
/// bisection on where the Wilson interval stops covering 1/2.
template <class Probe>
BisectionResult bisect_crossing(Probe&& probe, std::int64_t trials, const BisectionOptions& opt,
                                const ProgressFn& progress = {}) {
  require(trials > 0, "bisection needs at least one trial per level");
  require(opt.target_rel_tol > 0.0, "target relative tolerance must be positive");
  require(opt.initial_low > 0.0 && opt.initial_high > opt.initial_low, "need 0 < initial_low < initial_high");
  BisectionResult out;
  double cert_lo = opt.initial_low;
  double cert_hi = opt.initial_high;
  auto evaluate = [&](double x) {
    BisectionLevel level;
    level.intensity = x;
    level.trials = trials;
    level.successes = probe(x);
    level.interval = wilson_interval(level.successes, trials);
    out.history.push_back(level);
    if (progress) progress(level, cert_lo, cert_hi);
    return level;
  };

  BisectionLevel work_lo = evaluate(cert_lo);
  for (int e = 0; work_lo.interval.high >= 0.5; ++e) {
    if (e == opt.max_expansions) throw EstimationFailed("could not find an intensity below the crossing point");
    cert_lo *= 0.5;
    work_lo = evaluate(cert_lo);
  }
  BisectionLevel work_hi = evaluate(cert_hi);
  for (int e = 0; work_hi.interval.low <= 0.5; ++e) {
    if (e == opt.max_expansions) throw EstimationFailed("could not find an intensity above the crossing point");
    cert_hi *= 2.0;
    work_hi = evaluate(cert_hi);
  }

  for (int level = 0; level < opt.max_levels; ++level) {
    const double width = work_hi.intensity - work_lo.intensity;
    if (width <= opt.target_rel_tol * 0.5 * (work_hi.intensity + work_lo.intensity)) break;
    if (work_lo.interval.high >= 0.5 && work_hi.interval.low <= 0.5) {
      out.resolution_limited = true;
      break;
    }
    const double mid = 0.5 * (work_lo.intensity + work_hi.intensity);
    const BisectionLevel at_mid = evaluate(mid);
    if (at_mid.interval.high < 0.5) cert_lo = mid;
    if (at_mid.interval.low > 0.5) cert_hi = mid;
    if (2 * at_mid.successes < trials) {
      work_lo = at_mid;
    } else if (2 * at_mid.successes > trials) {
      work_hi = at_mid;
    } else {
      work_lo = at_mid;
      work_hi = at_mid;
      break;
    }
  }
  const double p_lo = work_lo.fraction();
  const double p_hi = work_hi.fraction();
  const double t = p_hi > p_lo ? std::clamp((0.5 - p_lo) / (p_hi - p_lo), 0.0, 1.0) : 0.5;
  out.estimate = work_lo.intensity + t * (work_hi.intensity - work_lo.intensity);

  // Tighten both ends of the interval around the estimate.
  for (int i = 0; i < opt.interval_refinements; ++i) {
    const double mid = 0.5 * (cert_lo + std::max(cert_lo, std::min(out.estimate, work_lo.intensity)));
    if (!(mid > cert_lo)) break;
    if (evaluate(mid).interval.high < 0.5) cert_lo = mid;
    else work_lo.intensity = mid;
  }
  for (int i = 0; i < opt.interval_refinements; ++i) {
    const double mid = 0.5 * (cert_hi + std::min(cert_hi, std::max(out.estimate, work_hi.intensity)));
    if (!(mid < cert_hi)) break;
    if (evaluate(mid).interval.low > 0.5) cert_hi = mid;
    else work_hi.intensity = mid;
  }
  out.estimate = std::clamp(out.estimate, cert_lo, cert_hi);
  out.low = cert_lo;
  out.high = cert_hi;
  return out;
}

struct ThresholdEstimate {
  int dimension = 2;
  double box_side = 0.0;
  std::int64_t trials = 0;
  std::uint64_t seed = 0;
  double lambda_c = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  /// lambda_c v_d sum_i w_i (2 r_i)^d.
  double normalized = 0.0;
  double normalized_low = 0.0;
  double normalized_high = 0.0;
  /// 1 - exp(-normalized / 2^d).
  double covered_volume = 0.0;
  bool resolution_limited = false;
  std::vector<BisectionLevel> history;

  double ci_width() const { return ci_high - ci_low; }
  double covered_volume_low() const { return covered_volume_of(normalized_low); }
  double covered_volume_high() const { return covered_volume_of(normalized_high); }

  double covered_volume_of(double normalized_intensity) const {
    return -std::expm1(-std::ldexp(normalized_intensity, -dimension));
  }
};

struct EstimationOptions {
  unsigned threads = 0;
  ProgressFn progress;
};

/// Per-trial crossing times (expected-count units) for trials 0..trials-1.
inline std::vector<double> crossing_times(const boolean_model::SamplingFrame& frame, std::int64_t trials,
                                          std::uint64_t seed, unsigned threads = 0) {
  std::vector<double> times(static_cast<std::size_t>(trials));
  parallel_for(times.size(), threads, [&](std::size_t t) {
    times[t] = boolean_model::crossing_time(frame, seed, t, boolean_model::kMaxExpectedBalls);
  });
  return times;
}

/// Crossing indicator of each trial at one intensity, read off crossing times.
inline std::vector<bool> crossing_indicators(const std::vector<double>& times,
                                             const boolean_model::SamplingFrame& frame,
                                             double normalized_intensity) {
  const double expected = frame.expected_count(normalized_intensity);
  boolean_model::detail::check_capacity(expected);
  std::vector<bool> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(t <= expected);
  return out;
}

inline ThresholdEstimate estimate_lambda_c(const RadiusMixture& mixture, const boolean_model::BoxSpec& box,
                                           std::int64_t trials, double target_rel_tol, std::uint64_t seed,
                                           const EstimationOptions& options = {}) {
  require(trials >= kMinTrials, "need at least " + std::to_string(kMinTrials) + " trials per level");
  require(box.boundary == boolean_model::Boundary::kCrossing, "threshold estimation needs a crossing box");
  require(box.dimension <= kMaxSimulationDimension,
          "threshold estimation is limited to d <= " + std::to_string(kMaxSimulationDimension));
  const auto frame = boolean_model::SamplingFrame::make(mixture, box);
  const std::vector<double> times = crossing_times(frame, trials, seed, options.threads);

  auto probe = [&](double normalized_intensity) {
    const double expected = frame.expected_count(normalized_intensity);
    boolean_model::detail::check_capacity(expected);
    return static_cast<std::int64_t>(std::count_if(times.begin(), times.end(), [&](double t) { return t <= expected; }));
  };
  BisectionOptions bopt;
  bopt.target_rel_tol = target_rel_tol;
  // A Galton-Watson comparison puts the monodisperse threshold above
  // normalized intensity 1; the search widens the bracket when needed.
  bopt.initial_low = 1.0;
  bopt.initial_high = 8.0;
  const BisectionResult b = bisect_crossing(probe, trials, bopt, options.progress);

  ThresholdEstimate est;
  est.dimension = box.dimension;
  est.box_side = box.side;
  est.trials = trials;
  est.seed = seed;
  est.normalized = b.estimate;
  est.normalized_low = b.low;
  est.normalized_high = b.high;
  est.lambda_c = b.estimate / frame.normalizer;
  est.ci_low = b.low / frame.normalizer;
  est.ci_high = b.high / frame.normalizer;
  est.covered_volume = est.covered_volume_of(b.estimate);
  est.resolution_limited = b.resolution_limited;
  est.history = b.history;
  return est;
}

struct LadderResult {
  std::vector<ThresholdEstimate> levels;
  /// drift[i] = |lambda_c(level i) - lambda_c(level i - 1)|, drift[0] = 0.
  std::vector<double> drift;
  /// Final drift exceeds the final confidence-interval width.
  bool systematic = false;

  const ThresholdEstimate& headline() const { return levels.back(); }
};

inline LadderResult size_ladder(const RadiusMixture& mixture, int d, const std::vector<double>& sides,
                                std::int64_t trials, std::uint64_t seed, double target_rel_tol = 0.02,
                                const EstimationOptions& options = {}) {
  require(!sides.empty(), "size ladder needs at least one side");
  for (std::size_t i = 1; i < sides.size(); ++i) require(sides[i] > sides[i - 1], "sides must increase");
  LadderResult out;
  for (double side : sides) {
    const boolean_model::BoxSpec box{d, side, boolean_model::Boundary::kCrossing};
    out.levels.push_back(estimate_lambda_c(mixture, box, trials, target_rel_tol, seed, options));
    const double drift = out.levels.size() < 2 ? 0.0 : std::fabs(out.levels.back().lambda_c - out.levels[out.levels.size() - 2].lambda_c);
    out.drift.push_back(drift);
  }
  out.systematic = out.drift.back() > out.headline().ci_width();
  return out;
}

/// mu_d(dr) = r^{-d} mu(dr). d = 0 is the identity.
inline RadiusMixture mu_d_transform(const RadiusMixture& mu, int d) {
  require(d >= 0, "dimension must be non-negative");
  auto atoms = mu.atoms();
  for (auto& a : atoms) a.log_weight -= d * std::log(a.radius);
  return RadiusMixture::from_log_weights(std::move(atoms));
}

/// nu(n, a) = sum_{k < n} a^{dk} delta_{a^{-k}}.
inline RadiusMixture multiscale_family(int n, double a, int d) {
  require(n >= 1, "n must be at least 1");
  require(std::isfinite(a) && a > 1.0, "a must exceed 1");
  require(d >= 0, "dimension must be non-negative");
  std::vector<RadiusMixture::Atom> atoms;
  for (int k = 0; k < n; ++k) atoms.push_back({std::pow(a, -k), d * k * std::log(a)});
  return RadiusMixture::from_log_weights(std::move(atoms));
}

/// (1 - alpha) delta_1 + alpha rho^{-d} delta_rho; atoms with zero weight are dropped.
inline RadiusMixture alpha_mixture(double rho, double alpha, int d) {
  require(std::isfinite(rho) && rho > 1.0, "rho must exceed 1");
  require(alpha >= 0.0 && alpha <= 1.0, "alpha must lie in [0, 1]");
  std::vector<RadiusMixture::Atom> atoms;
  if (alpha < 1.0) atoms.push_back({1.0, std::log1p(-alpha)});
  if (alpha > 0.0) atoms.push_back({rho, std::log(alpha) - d * std::log(rho)});
  return RadiusMixture::from_log_weights(std::move(atoms));
}

struct AlphaPoint {
  double rho = 0.0;
  double alpha = 0.0;
  ThresholdEstimate estimate;
};

/// Critical covered volume along the alpha family. The box side is given in
/// units of the largest radius of each mixture, so the two endpoints are
/// scaled copies of one another and agree trial by trial.
inline std::vector<AlphaPoint> alpha_sweep(double rho, const std::vector<double>& alphas, int d, double side_in_rmax,
                                           std::int64_t trials, std::uint64_t seed, double target_rel_tol = 0.02,
                                           const EstimationOptions& options = {}) {
  std::vector<AlphaPoint> out;
  for (double alpha : alphas) {
    const RadiusMixture m = alpha_mixture(rho, alpha, d);
    const boolean_model::BoxSpec box{d, side_in_rmax * m.max_radius(), boolean_model::Boundary::kCrossing};
    out.push_back({rho, alpha, estimate_lambda_c(m, box, trials, target_rel_tol, seed, options)});
  }
  return out;
}

/// Half-width of the pooled interval for a difference of two estimates.
inline double pooled_half_width(double width_a, double width_b) {
  return 0.5 * std::sqrt(width_a * width_a + width_b * width_b);
}

}  // namespace contperc::estimation
