#pragma once

// Boolean models driven by finite atomic radius measures, sampled in a
// d-dimensional box, with cluster detection by spatial hashing and
// union-find.
//
// Sampling happens in box-relative units: lengths are measured in units of
// the largest radius and centers are drawn as unit-cube points mapped onto
// the sampling window. Two models that differ by a radius scaling (with the
// box scaled alike), or by the total mass of the measure, therefore produce
// the same configurations from the same seed. Ball counts are realized as
// unit-rate arrival times below the expected count, so the configuration at
// a lower intensity is a prefix of the one at a higher intensity.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "contperc/error.hpp"
#include "contperc/geometry.hpp"
#include "contperc/mixture.hpp"
#include "contperc/rng.hpp"

namespace contperc::boolean_model {

enum class Boundary { kCrossing, kTorus };

inline constexpr double kMaxExpectedBalls = 5e7;

struct BoxSpec {
  int dimension = 2;
  double side = 1.0;
  Boundary boundary = Boundary::kCrossing;

  void validate(const RadiusMixture& mixture) const {
    require(dimension >= 2, "box dimension must be at least 2");
    require(std::isfinite(side) && side > 4.0 * mixture.max_radius(),
            "box side must exceed 4 times the largest radius");
  }
};

/// A (mixture, box) pair reduced to what the sampler needs, in units of the
/// largest radius.
struct SamplingFrame {
  int dimension = 2;
  Boundary boundary = Boundary::kCrossing;
  double unit = 1.0;    // physical length of one frame unit
  double side = 1.0;    // box side in frame units
  double origin = 0.0;  // lower corner of the sampling window
  double extent = 1.0;  // side of the sampling window
  std::vector<double> radii;
  std::vector<double> cumulative;  // cumulative atom probabilities
  /// v_d sum_i w_i (2 r_i)^d in physical units: lambda * normalizer is the normalized intensity.
  double normalizer = 1.0;
  /// Expected number of sampled balls per unit of normalized intensity.
  double count_per_normalized = 1.0;

  static SamplingFrame make(const RadiusMixture& mixture, const BoxSpec& box) {
    box.validate(mixture);
    SamplingFrame f;
    f.dimension = box.dimension;
    f.boundary = box.boundary;
    f.unit = mixture.max_radius();
    f.side = box.side / f.unit;
    // Crossing boxes get a halo one largest radius wide on every face.
    f.origin = box.boundary == Boundary::kCrossing ? -1.0 : 0.0;
    f.extent = box.boundary == Boundary::kCrossing ? f.side + 2.0 : f.side;
    const auto p = mixture.probabilities();
    double acc = 0.0;
    double moment = 0.0;
    for (std::size_t i = 0; i < mixture.size(); ++i) {
      const double r = mixture.radius(i) / f.unit;
      f.radii.push_back(r);
      acc += p[i];
      f.cumulative.push_back(acc);
      moment += p[i] * std::pow(2.0 * r, f.dimension);
    }
    f.cumulative.back() = 1.0;
    f.normalizer = mixture.normalizer(box.dimension);
    f.count_per_normalized = std::exp(f.dimension * std::log(f.extent) -
                                      geometry::log_unit_ball_volume(f.dimension) - std::log(moment));
    return f;
  }

  double max_radius() const { return radii.back(); }

  double expected_count(double normalized_intensity) const { return normalized_intensity * count_per_normalized; }
};

struct BallConfiguration {
  int dimension = 2;
  Boundary boundary = Boundary::kCrossing;
  double unit = 1.0;
  double side = 1.0;
  std::vector<double> coords;  // frame units, dimension entries per ball
  std::vector<double> radii;   // frame units
  std::vector<std::uint32_t> atom;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  double lambda = 0.0;

  std::size_t size() const { return radii.size(); }
  std::span<const double> frame_center(std::size_t i) const {
    return {coords.data() + i * static_cast<std::size_t>(dimension), static_cast<std::size_t>(dimension)};
  }
  std::vector<double> center(std::size_t i) const {
    std::vector<double> c(frame_center(i).begin(), frame_center(i).end());
    for (double& v : c) v *= unit;
    return c;
  }
  double radius(std::size_t i) const { return radii[i] * unit; }
  double box_side() const { return side * unit; }
};

/// Sequential generator of the balls of one trial.
class BallStream {
 public:
  BallStream(const SamplingFrame& frame, std::uint64_t seed, std::uint64_t stream)
      : frame_(&frame), gen_(seed, rng::stream_id(rng::Purpose::kBalls, stream)) {}

  /// Draws the next ball into `x` and `atom`; returns its arrival time.
  double next(std::span<double> x, std::uint32_t& atom) {
    time_ += gen_.exponential();
    const double u = gen_.uniform();
    const auto& cum = frame_->cumulative;
    atom = static_cast<std::uint32_t>(std::upper_bound(cum.begin(), cum.end() - 1, u) - cum.begin());
    for (double& v : x) v = frame_->origin + gen_.uniform() * frame_->extent;
    return time_;
  }

 private:
  const SamplingFrame* frame_;
  rng::Stream gen_;
  double time_ = 0.0;
};

namespace detail {

inline double separation_sq(std::span<const double> a, std::span<const double> b, bool periodic, double side) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    double delta = a[k] - b[k];
    if (periodic) {
      if (delta > 0.5 * side) delta -= side;
      else if (delta < -0.5 * side) delta += side;
    }
    s += delta * delta;
  }
  return s;
}

inline void check_capacity(double expected) {
  if (!(expected <= kMaxExpectedBalls)) {
    throw CapacityError("expected ball count " + std::to_string(expected) + " exceeds the limit of " +
                        std::to_string(kMaxExpectedBalls));
  }
}

}  // namespace detail

/// Open balls i and j intersect: |c_i - c_j| < r_i + r_j (minimum image on a torus).
inline bool balls_overlap(const BallConfiguration& c, std::size_t i, std::size_t j) {
  const double reach = c.radii[i] + c.radii[j];
  return detail::separation_sq(c.frame_center(i), c.frame_center(j), c.boundary == Boundary::kTorus, c.side) <
         reach * reach;
}

/// Uniform grids, one per radius atom, with cell side twice the atom radius.
/// Balls are inserted incrementally; a query visits the cells of every atom
/// layer that can hold a ball within reach of the query point.
class BallGrid {
 public:
  BallGrid(int dimension, bool periodic, double origin, double extent, std::span<const double> atom_radii)
      : dimension_(dimension), periodic_(periodic), origin_(origin), extent_(extent) {
    for (double r : atom_radii) {
      Layer layer;
      layer.radius = r;
      const double target = 2.0 * r;
      if (periodic_) {
        layer.cells = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(extent_ / target)));
        layer.width = extent_ / static_cast<double>(layer.cells);
      } else {
        layer.cells = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(extent_ / target)));
        layer.width = target;
      }
      std::uint64_t total = 1;
      for (int k = 0; k < dimension_; ++k) {
        if (total > (std::uint64_t{1} << 62) / static_cast<std::uint64_t>(layer.cells)) {
          throw CapacityError("spatial grid too fine for this box and dimension");
        }
        total *= static_cast<std::uint64_t>(layer.cells);
      }
      layer.dense = total <= kDenseCellLimit;
      if (layer.dense) layer.head.assign(total, -1);
      layers_.push_back(std::move(layer));
    }
  }

  void insert(std::int32_t ball, std::span<const double> x, std::uint32_t atom) {
    if (next_.size() <= static_cast<std::size_t>(ball)) next_.resize(static_cast<std::size_t>(ball) + 1, -1);
    Layer& layer = layers_[atom];
    std::uint64_t id = 0;
    for (int k = dimension_ - 1; k >= 0; --k) {
      auto idx = static_cast<std::int64_t>(std::floor((x[k] - origin_) / layer.width));
      idx = std::clamp<std::int64_t>(idx, 0, layer.cells - 1);
      id = id * static_cast<std::uint64_t>(layer.cells) + static_cast<std::uint64_t>(idx);
    }
    std::int32_t& head = layer.dense ? layer.head[id] : layer.sparse.try_emplace(id, -1).first->second;
    next_[ball] = head;
    head = ball;
  }

  /// Calls fn(j) for every inserted ball j whose center may lie within
  /// reach + r_j of x. May report balls farther away; never misses one.
  template <class Fn>
  void for_each_candidate(std::span<const double> x, double reach, Fn&& fn) const {
    std::int64_t lo[kMaxDim];
    std::int64_t hi[kMaxDim];
    std::int64_t idx[kMaxDim];
    for (const Layer& layer : layers_) {
      const double span = reach + layer.radius;
      bool empty = false;
      for (int k = 0; k < dimension_; ++k) {
        lo[k] = static_cast<std::int64_t>(std::floor((x[k] - origin_ - span) / layer.width));
        hi[k] = static_cast<std::int64_t>(std::floor((x[k] - origin_ + span) / layer.width));
        if (periodic_ && hi[k] - lo[k] + 1 >= layer.cells) {
          lo[k] = 0;
          hi[k] = layer.cells - 1;
        } else if (!periodic_) {
          lo[k] = std::max<std::int64_t>(lo[k], 0);
          hi[k] = std::min<std::int64_t>(hi[k], layer.cells - 1);
        }
        if (lo[k] > hi[k]) empty = true;
        idx[k] = lo[k];
      }
      if (empty) continue;
      while (true) {
        std::uint64_t id = 0;
        for (int k = dimension_ - 1; k >= 0; --k) {
          std::int64_t c = idx[k];
          if (c < 0) c += layer.cells;
          else if (c >= layer.cells) c -= layer.cells;
          id = id * static_cast<std::uint64_t>(layer.cells) + static_cast<std::uint64_t>(c);
        }
        std::int32_t j;
        if (layer.dense) {
          j = layer.head[id];
        } else {
          const auto it = layer.sparse.find(id);
          j = it == layer.sparse.end() ? -1 : it->second;
        }
        for (; j >= 0; j = next_[j]) fn(j);
        int k = 0;
        while (k < dimension_ && ++idx[k] > hi[k]) {
          idx[k] = lo[k];
          ++k;
        }
        if (k == dimension_) break;
      }
    }
  }

  static constexpr int kMaxDim = 64;

 private:
  static constexpr std::uint64_t kDenseCellLimit = std::uint64_t{1} << 22;

  struct Layer {
    double radius = 0.0;
    double width = 1.0;
    std::int64_t cells = 1;
    bool dense = true;
    std::vector<std::int32_t> head;
    std::unordered_map<std::uint64_t, std::int32_t> sparse;
  };

  int dimension_;
  bool periodic_;
  double origin_;
  double extent_;
  std::vector<Layer> layers_;
  std::vector<std::int32_t> next_;
};

/// Union-find with path halving and union by size.
class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n = 0) { resize(n); }

  void resize(std::size_t n) {
    const std::size_t old = parent_.size();
    parent_.resize(n);
    size_.resize(n, 1);
    std::iota(parent_.begin() + static_cast<std::ptrdiff_t>(old), parent_.end(), static_cast<std::int32_t>(old));
  }

  std::int32_t find(std::int32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  /// Merges the sets of a and b and returns the surviving root.
  std::int32_t unite(std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return a;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return a;
  }

 private:
  std::vector<std::int32_t> parent_;
  std::vector<std::int32_t> size_;
};

struct ClusterLabeling {
  /// root[i] is the representative ball of the cluster containing i.
  std::vector<std::int32_t> root;
  /// Indexed by ball; meaningful at representatives. A cluster touches the
  /// low face if one of its balls reaches x_1 < 0, the high face if one
  /// reaches x_1 > L.
  std::vector<char> touches_low;
  std::vector<char> touches_high;

  bool same_cluster(std::size_t i, std::size_t j) const { return root[i] == root[j]; }

  std::size_t cluster_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < root.size(); ++i) n += root[i] == static_cast<std::int32_t>(i);
    return n;
  }

  /// Each ball labeled by the smallest index in its cluster.
  std::vector<std::int32_t> canonical_labels() const {
    std::vector<std::int32_t> smallest(root.size(), std::numeric_limits<std::int32_t>::max());
    for (std::size_t i = 0; i < root.size(); ++i) {
      smallest[root[i]] = std::min(smallest[root[i]], static_cast<std::int32_t>(i));
    }
    std::vector<std::int32_t> out(root.size());
    for (std::size_t i = 0; i < root.size(); ++i) out[i] = smallest[root[i]];
    return out;
  }
};

namespace detail {

inline void check_box(const BallConfiguration& config, const BoxSpec& box) {
  require(config.dimension == box.dimension, "configuration and box dimensions differ");
  require(config.boundary == box.boundary, "configuration and box boundaries differ");
}

inline BallGrid grid_for(const BallConfiguration& config) {
  std::vector<double> atom_radii;
  for (std::size_t i = 0; i < config.size(); ++i) {
    if (config.atom[i] >= atom_radii.size()) atom_radii.resize(config.atom[i] + 1, 0.0);
    atom_radii[config.atom[i]] = config.radii[i];
  }
  // Atoms that never occur still need a (never populated) layer.
  for (double& r : atom_radii) {
    if (r == 0.0) r = 1.0;
  }
  const bool torus = config.boundary == Boundary::kTorus;
  return BallGrid(config.dimension, torus, torus ? 0.0 : -1.0, torus ? config.side : config.side + 2.0, atom_radii);
}

}  // namespace detail

/// Samples the Boolean model driven by lambda * mixture in the box.
inline BallConfiguration sample_frame(const SamplingFrame& frame, double normalized_intensity, std::uint64_t seed,
                                      std::uint64_t stream = 0) {
  require(std::isfinite(normalized_intensity) && normalized_intensity >= 0.0, "intensity must be non-negative");
  const double expected = frame.expected_count(normalized_intensity);
  detail::check_capacity(expected);
  BallConfiguration c;
  c.dimension = frame.dimension;
  c.boundary = frame.boundary;
  c.unit = frame.unit;
  c.side = frame.side;
  c.seed = seed;
  c.stream = stream;
  c.lambda = normalized_intensity / frame.normalizer;
  BallStream balls(frame, seed, stream);
  std::vector<double> x(static_cast<std::size_t>(frame.dimension));
  std::uint32_t atom = 0;
  while (balls.next(x, atom) <= expected) {
    c.coords.insert(c.coords.end(), x.begin(), x.end());
    c.radii.push_back(frame.radii[atom]);
    c.atom.push_back(atom);
  }
  return c;
}

inline BallConfiguration sample(const RadiusMixture& mixture, double lambda, const BoxSpec& box, std::uint64_t seed,
                                std::uint64_t stream = 0) {
  require(std::isfinite(lambda) && lambda >= 0.0, "lambda must be non-negative");
  const SamplingFrame frame = SamplingFrame::make(mixture, box);
  BallConfiguration c = sample_frame(frame, lambda * frame.normalizer, seed, stream);
  c.lambda = lambda;
  return c;
}

/// Keeps each ball independently with probability keep.
inline BallConfiguration thin(const BallConfiguration& config, double keep, std::uint64_t seed) {
  require(keep >= 0.0 && keep <= 1.0, "keep probability must lie in [0, 1]");
  rng::Stream gen(seed, rng::stream_id(rng::Purpose::kThinning, config.stream));
  BallConfiguration out = config;
  out.coords.clear();
  out.radii.clear();
  out.atom.clear();
  out.lambda = config.lambda * keep;
  for (std::size_t i = 0; i < config.size(); ++i) {
    if (!gen.bernoulli(keep)) continue;
    const auto x = config.frame_center(i);
    out.coords.insert(out.coords.end(), x.begin(), x.end());
    out.radii.push_back(config.radii[i]);
    out.atom.push_back(config.atom[i]);
  }
  return out;
}

inline ClusterLabeling clusters(const BallConfiguration& config, const BoxSpec& box) {
  detail::check_box(config, box);
  const std::size_t n = config.size();
  BallGrid grid = detail::grid_for(config);
  DisjointSets sets(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = config.frame_center(i);
    grid.for_each_candidate(xi, config.radii[i], [&](std::int32_t j) {
      if (balls_overlap(config, i, static_cast<std::size_t>(j))) sets.unite(static_cast<std::int32_t>(i), j);
    });
    grid.insert(static_cast<std::int32_t>(i), xi, config.atom[i]);
  }
  ClusterLabeling out;
  out.root.resize(n);
  out.touches_low.assign(n, 0);
  out.touches_high.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::int32_t r = sets.find(static_cast<std::int32_t>(i));
    out.root[i] = r;
    if (config.boundary == Boundary::kCrossing) {
      const double x1 = config.frame_center(i)[0];
      if (x1 - config.radii[i] < 0.0) out.touches_low[r] = 1;
      if (x1 + config.radii[i] > config.side) out.touches_high[r] = 1;
    }
  }
  return out;
}

/// True iff one cluster touches both faces orthogonal to the first axis.
inline bool percolates(const ClusterLabeling& labeling, const BallConfiguration& config, const BoxSpec& box) {
  detail::check_box(config, box);
  if (box.boundary == Boundary::kTorus) {
    throw NotSupported("percolation on a torus (wrapping criterion) is not implemented");
  }
  for (std::size_t i = 0; i < labeling.root.size(); ++i) {
    if (labeling.root[i] == static_cast<std::int32_t>(i) && labeling.touches_low[i] && labeling.touches_high[i]) {
      return true;
    }
  }
  return false;
}

/// Arrival time (in expected-count units) of the ball whose insertion first
/// creates a face-to-face crossing cluster in this trial, or +infinity if
/// none appears before `time_cap`. The trial percolates at intensity
/// lambda exactly when this time is <= the expected count at lambda.
inline double crossing_time(const SamplingFrame& frame, std::uint64_t seed, std::uint64_t stream, double time_cap) {
  require(frame.boundary == Boundary::kCrossing, "crossing time needs a crossing box");
  BallStream balls(frame, seed, stream);
  BallGrid grid(frame.dimension, false, frame.origin, frame.extent, frame.radii);
  DisjointSets sets;
  std::vector<double> coords;
  std::vector<double> radii;
  std::vector<char> low;
  std::vector<char> high;
  const auto d = static_cast<std::size_t>(frame.dimension);
  std::vector<double> x(d);
  std::uint32_t atom = 0;
  for (std::int32_t i = 0;; ++i) {
    const double t = balls.next(x, atom);
    if (t > time_cap) return std::numeric_limits<double>::infinity();
    const double r = frame.radii[atom];
    coords.insert(coords.end(), x.begin(), x.end());
    radii.push_back(r);
    sets.resize(static_cast<std::size_t>(i) + 1);
    low.push_back(x[0] - r < 0.0);
    high.push_back(x[0] + r > frame.side);
    std::int32_t root = i;
    grid.for_each_candidate(x, r, [&](std::int32_t j) {
      const double reach = r + radii[j];
      const std::span<const double> xj(coords.data() + static_cast<std::size_t>(j) * d, d);
      if (detail::separation_sq(x, xj, false, frame.side) < reach * reach) {
        const std::int32_t rj = sets.find(j);
        if (rj == root) return;
        const char lo = low[root] | low[rj];
        const char hi = high[root] | high[rj];
        root = sets.unite(root, rj);
        low[root] = lo;
        high[root] = hi;
      }
    });
    grid.insert(i, x, atom);
    if (low[root] && high[root]) return t;
  }
}

/// 1 - exp(-lambda v_d sum_i w_i r_i^d), the probability that a point is covered.
inline double covered_fraction_exact(const RadiusMixture& mixture, double lambda, int d) {
  require(std::isfinite(lambda) && lambda >= 0.0, "lambda must be non-negative");
  require(d >= 1, "dimension must be at least 1");
  if (lambda == 0.0) return 0.0;
  return -std::expm1(-lambda * std::exp(geometry::log_unit_ball_volume(d) + mixture.log_moment(d)));
}

struct CoverageEstimate {
  double fraction = 0.0;
  double standard_error = 0.0;
  std::uint64_t probes = 0;
};

/// Fraction of uniform probe points in the box [0, L)^d that lie in some ball.
inline CoverageEstimate covered_fraction_empirical(const BallConfiguration& config, const BoxSpec& box,
                                                   std::uint64_t probes, std::uint64_t seed) {
  detail::check_box(config, box);
  require(probes >= 1, "need at least one probe");
  BallGrid grid = detail::grid_for(config);
  for (std::size_t i = 0; i < config.size(); ++i) {
    grid.insert(static_cast<std::int32_t>(i), config.frame_center(i), config.atom[i]);
  }
  rng::Stream gen(seed, rng::stream_id(rng::Purpose::kProbes, config.stream));
  const bool torus = config.boundary == Boundary::kTorus;
  std::vector<double> p(static_cast<std::size_t>(config.dimension));
  std::uint64_t hits = 0;
  for (std::uint64_t n = 0; n < probes; ++n) {
    for (double& v : p) v = gen.uniform() * config.side;
    bool covered = false;
    grid.for_each_candidate(p, 0.0, [&](std::int32_t j) {
      if (covered) return;
      const double r = config.radii[j];
      covered = detail::separation_sq(p, config.frame_center(j), torus, config.side) < r * r;
    });
    hits += covered;
  }
  CoverageEstimate out;
  out.probes = probes;
  out.fraction = static_cast<double>(hits) / static_cast<double>(probes);
  out.standard_error = std::sqrt(out.fraction * (1.0 - out.fraction) / static_cast<double>(probes));
  return out;
}

// Plain-text dump: header "#contperc v1 d=<d> L=<L> seed=<seed>" then one
// line per ball "x_1 ... x_d r" in physical units.

inline void write_configuration(std::ostream& os, const BallConfiguration& c) {
  auto fmt = [](double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
  };
  os << "#contperc v1 d=" << c.dimension << " L=" << fmt(c.box_side()) << " seed=" << c.seed << '\n';
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (double v : c.frame_center(i)) os << fmt(v * c.unit) << ' ';
    os << fmt(c.radius(i)) << '\n';
  }
}

struct ConfigurationDump {
  int dimension = 0;
  double side = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::vector<double>> centers;
  std::vector<double> radii;
};

inline ConfigurationDump read_configuration(std::istream& is) {
  ConfigurationDump out;
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), "configuration dump is empty");
  {
    std::istringstream header(line);
    std::string magic;
    std::string version;
    std::string dim;
    std::string side;
    std::string seed;
    header >> magic >> version >> dim >> side >> seed;
    require(magic == "#contperc" && version == "v1", "not a contperc v1 configuration dump");
    require(dim.rfind("d=", 0) == 0 && side.rfind("L=", 0) == 0 && seed.rfind("seed=", 0) == 0,
            "malformed configuration header");
    out.dimension = std::stoi(dim.substr(2));
    out.side = std::stod(side.substr(2));
    out.seed = std::stoull(seed.substr(5));
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::vector<double> values;
    double v = 0.0;
    while (row >> v) values.push_back(v);
    require(values.size() == static_cast<std::size_t>(out.dimension) + 1, "configuration row has wrong arity");
    out.radii.push_back(values.back());
    values.pop_back();
    out.centers.push_back(std::move(values));
  }
  return out;
}

}  // namespace contperc::boolean_model
