// Frostman constants, the modified alpha-energy of a finite point set, and
// the Frostman-to-energy conversion bound.  All distances use the
// entrywise sup norm.
#pragma once

#include "r9/linalg.hpp"
#include "r9/partition_cover.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace r9 {

struct energy_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Frostman-type constant of the weighted set: the maximum over centers
// w in F and dyadic radii r in [delta_min, 1] of mass(closed ball) / r^alpha.
// Restricting centers to F-points and radii to dyadic values loses at most
// a factor 2^9 * 2^alpha against arbitrary centers and radii (any ball is
// contained in the doubled ball around its nearest F-point), and is exactly
// what the energy conversion bound consumes.
inline double frostman_constant(const PointSet& f, double alpha,
                                double delta_min) {
  if (!(alpha > 0.0 && alpha < 9.0))
    throw energy_error("frostman_constant: alpha must be in (0, 9)");
  if (!(delta_min > 0.0 && delta_min < 1.0))
    throw energy_error("frostman_constant: delta_min must be in (0, 1)");
  double best = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    for (double r = 1.0; r >= delta_min; r *= 0.5) {
      double mass = 0.0;
      for (std::size_t j = 0; j < f.size(); ++j)
        if (sup_norm(Vec9(f.points[j] - f.points[i])) <= r)
          mass += f.weights[j];
      best = std::max(best, mass / std::pow(r, alpha));
    }
  }
  return best;
}

// Modified alpha-energy at a point of F: the sum over the other points of
// max{distance, delta}^{-alpha}.  The point is identified by exact
// coordinate equality; repeated copies of w contribute delta^{-alpha} each.
inline double alpha_energy(const PointSet& f, double delta, double alpha,
                           const Vec9& w) {
  std::size_t self = f.size();
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f.points[i] == w) {
      self = i;
      break;
    }
  }
  if (self == f.size())
    throw energy_error("alpha_energy: the base point is not in the set");
  double total = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) {
    if (j == self) continue;
    double d = sup_norm(Vec9(f.points[j] - w));
    total += std::pow(std::max(d, delta), -alpha);
  }
  return total;
}

struct EnergyReport {
  double alpha = 0.0;
  double delta = 0.0;
  std::vector<double> per_point;
  double max = 0.0;
  double mean = 0.0;
};

inline EnergyReport energy_report(const PointSet& f, double delta,
                                  double alpha) {
  EnergyReport rep;
  rep.alpha = alpha;
  rep.delta = delta;
  for (const Vec9& w : f.points)
    rep.per_point.push_back(alpha_energy(f, delta, alpha, w));
  rep.max = *std::max_element(rep.per_point.begin(), rep.per_point.end());
  double s = 0.0;
  for (double v : rep.per_point) s += v;
  rep.mean = s / static_cast<double>(rep.per_point.size());
  return rep;
}

inline nlohmann::json to_json(const EnergyReport& rep) {
  return nlohmann::json{{"alpha", rep.alpha},
                        {"delta", rep.delta},
                        {"per_point", rep.per_point},
                        {"max", rep.max},
                        {"mean", rep.mean}};
}

// Upper bound for the maximal beta-energy of an n-point set satisfying the
// Frostman condition with constant C at exponent alpha > beta:
// 2^9 * C * (1 + 1/(1 - 2^{beta - alpha})) * n.
inline double frostman_to_energy_bound(double c, double alpha, double beta,
                                       std::int64_t n_points) {
  if (!(beta > 0.0 && beta < alpha))
    throw energy_error(
        "frostman_to_energy_bound: need 0 < beta < alpha");
  return 512.0 * c * (1.0 + 1.0 / (1.0 - std::exp2(beta - alpha))) *
         static_cast<double>(n_points);
}

}  // namespace r9
