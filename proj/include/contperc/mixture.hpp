#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "contperc/error.hpp"
#include "contperc/geometry.hpp"

namespace contperc {

/// Finite atomic radius measure nu = sum_i w_i delta_{r_i}. Weights are held
/// as logarithms so that reweightings like r^{-d} stay finite for large d.
class RadiusMixture {
 public:
  struct Atom {
    double radius;
    double log_weight;
  };

  RadiusMixture() = default;

  /// Atoms as (radius, weight) pairs; they are sorted by radius.
  static RadiusMixture from_weights(const std::vector<std::pair<double, double>>& atoms) {
    std::vector<Atom> out;
    out.reserve(atoms.size());
    for (const auto& [r, w] : atoms) {
      require(std::isfinite(w) && w > 0.0, "mixture weights must be positive");
      out.push_back({r, std::log(w)});
    }
    return RadiusMixture(std::move(out));
  }

  static RadiusMixture from_log_weights(std::vector<Atom> atoms) { return RadiusMixture(std::move(atoms)); }

  static RadiusMixture dirac(double radius, double weight = 1.0) { return from_weights({{radius, weight}}); }

  /// Parses "r:w[,r:w...]".
  static RadiusMixture parse(const std::string& text) {
    std::vector<std::pair<double, double>> atoms;
    require(text.empty() || text.back() != ',', "mixture '" + text + "' ends with a separator");
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto colon = item.find(':');
      require(colon != std::string::npos, "mixture atom '" + item + "' is not of the form r:w");
      try {
        std::size_t used_r = 0;
        std::size_t used_w = 0;
        const std::string rs = item.substr(0, colon);
        const std::string ws = item.substr(colon + 1);
        const double r = std::stod(rs, &used_r);
        const double w = std::stod(ws, &used_w);
        require(used_r == rs.size() && used_w == ws.size(), "trailing characters");
        atoms.emplace_back(r, w);
      } catch (const std::logic_error&) {
        throw InvalidArgument("mixture atom '" + item + "' is not of the form r:w");
      }
    }
    require(!atoms.empty(), "mixture must have at least one atom");
    return from_weights(atoms);
  }

  std::size_t size() const { return atoms_.size(); }
  const std::vector<Atom>& atoms() const { return atoms_; }
  double radius(std::size_t i) const { return atoms_[i].radius; }
  double log_weight(std::size_t i) const { return atoms_[i].log_weight; }
  double weight(std::size_t i) const { return std::exp(atoms_[i].log_weight); }
  double max_radius() const { return atoms_.back().radius; }
  double min_radius() const { return atoms_.front().radius; }

  double log_mass() const { return log_sum_exp([](const Atom&) { return 0.0; }); }
  double mass() const { return std::exp(log_mass()); }

  /// Atom probabilities w_i / mass.
  std::vector<double> probabilities() const {
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& a : atoms_) top = std::max(top, a.log_weight);
    std::vector<double> p;
    double total = 0.0;
    for (const auto& a : atoms_) {
      p.push_back(std::exp(a.log_weight - top));
      total += p.back();
    }
    for (double& v : p) v /= total;
    return p;
  }

  /// ln of sum_i w_i (scale r_i)^d.
  double log_moment(int d, double scale = 1.0) const {
    return log_sum_exp([&](const Atom& a) { return d * std::log(scale * a.radius); });
  }

  /// v_d sum_i w_i (2 r_i)^d: multiplying an intensity by this gives the
  /// normalized intensity.
  double normalizer(int d) const { return std::exp(geometry::log_unit_ball_volume(d) + log_moment(d, 2.0)); }

  /// Image under r -> a r.
  RadiusMixture scaled_radii(double a) const {
    require(std::isfinite(a) && a > 0.0, "scale factor must be positive");
    auto out = atoms_;
    for (auto& atom : out) atom.radius *= a;
    return RadiusMixture(std::move(out));
  }

  /// c nu.
  RadiusMixture scaled_mass(double c) const {
    require(std::isfinite(c) && c > 0.0, "mass factor must be positive");
    auto out = atoms_;
    for (auto& atom : out) atom.log_weight += std::log(c);
    return RadiusMixture(std::move(out));
  }

  std::string to_string() const {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      if (i) os << ',';
      os << atoms_[i].radius << ':' << weight(i);
    }
    return os.str();
  }

 private:
  explicit RadiusMixture(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    require(!atoms_.empty(), "mixture must have at least one atom");
    std::sort(atoms_.begin(), atoms_.end(), [](const Atom& a, const Atom& b) { return a.radius < b.radius; });
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      require(std::isfinite(atoms_[i].radius) && atoms_[i].radius > 0.0, "mixture radii must be positive");
      require(std::isfinite(atoms_[i].log_weight), "mixture weights must be positive and finite");
      require(i == 0 || atoms_[i].radius > atoms_[i - 1].radius, "mixture radii must be distinct");
    }
  }

  template <class Term>
  double log_sum_exp(Term term) const {
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& a : atoms_) top = std::max(top, a.log_weight + term(a));
    double total = 0.0;
    for (const auto& a : atoms_) total += std::exp(a.log_weight + term(a) - top);
    return top + std::log(total);
  }

  std::vector<Atom> atoms_;
};

}  // namespace contperc
