// Seeded generators for structured test sets: hierarchical Cantor-type
// subsets of the unit cube, the same construction run inside the invariant
// obstruction subspace, and exact coordinate-subspace nets, together with
// fast Frostman diagnostics for the generated sets.
//
// All subdivision bookkeeping is integer-based (dyadic cube indices), so
// the generated sets are bit-identical across platforms for a fixed seed.
#pragma once

#include "r9/nondeg.hpp"
#include "r9/partition_cover.hpp"
#include "r9/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace r9 {

struct fractal_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrown when the projected point count of a generator exceeds its cap.
struct fractal_size_error : std::length_error {
  using std::length_error::length_error;
};

inline constexpr std::int64_t kDefaultMaxPoints = 10'000'000;

namespace detail {

// Level-`depth` occupied-cube indices of a hierarchical subdivision of
// [0,1)^dim: at each level every occupied dyadic cube keeps floor(2^alpha)
// or ceil(2^alpha) of its 2^dim children (stochastic rounding), chosen
// uniformly at random without replacement.  Children of one cube are
// emitted in increasing index order so the output order is canonical.
inline std::vector<std::vector<std::int64_t>> cantor_indices(
    int dim, double alpha, int depth, Rng& rng, std::int64_t max_points) {
  const int n_children = 1 << dim;
  const double branch = std::exp2(alpha);
  const int base = static_cast<int>(std::floor(branch));
  const double frac = branch - base;
  std::vector<std::vector<std::int64_t>> frontier{
      std::vector<std::int64_t>(dim, 0)};
  std::vector<int> order(n_children);
  for (int level = 0; level < depth; ++level) {
    std::vector<std::vector<std::int64_t>> next;
    next.reserve(frontier.size() * static_cast<std::size_t>(base + 1));
    for (const auto& cube : frontier) {
      int keep = base;
      if (frac > 0.0 && rng.uniform() < frac) ++keep;
      keep = std::min(keep, n_children);
      std::iota(order.begin(), order.end(), 0);
      for (int i = 0; i < keep; ++i) {
        int j = i + static_cast<int>(rng.below(
                        static_cast<std::uint64_t>(n_children - i)));
        std::swap(order[i], order[j]);
      }
      std::sort(order.begin(), order.begin() + keep);
      for (int i = 0; i < keep; ++i) {
        std::vector<std::int64_t> child(dim);
        for (int a = 0; a < dim; ++a)
          child[a] = cube[a] * 2 + ((order[i] >> a) & 1);
        next.push_back(std::move(child));
      }
    }
    if (static_cast<std::int64_t>(next.size()) > max_points)
      throw fractal_size_error(
          "cantor generator: realized point count exceeds the cap");
    frontier = std::move(next);
  }
  return frontier;
}

inline void check_cantor_args(int dim, double alpha, int depth,
                              std::int64_t max_points) {
  if (!(alpha > 0.0 && alpha <= static_cast<double>(dim)))
    throw fractal_error("cantor generator: alpha must be in (0, dim]");
  if (depth < 1) throw fractal_error("cantor generator: depth must be >= 1");
  if (max_points < 1)
    throw fractal_error("cantor generator: max_points must be >= 1");
  // Projected count 2^{depth * alpha} against the desk-scale cap.
  if (depth * alpha > std::log2(static_cast<double>(max_points)))
    throw fractal_size_error(
        "cantor generator: projected count 2^(depth*alpha) exceeds the cap");
}

}  // namespace detail

// Random Cantor-type subset of [0,1)^9 of target dimension alpha in (0,9]
// (alpha = 9 branches fully and returns the complete level-depth grid):
// cube centers at subdivision level `depth` (side 2^-depth).  Identical
// seeds give byte-identical output.
inline PointSet gen_cantor(double alpha, int depth, std::uint64_t seed,
                           std::int64_t max_points = kDefaultMaxPoints) {
  detail::check_cantor_args(9, alpha, depth, max_points);
  Rng rng(seed);
  auto idx = detail::cantor_indices(9, alpha, depth, rng, max_points);
  const double scale = std::ldexp(1.0, -depth);
  std::vector<Vec9> pts;
  pts.reserve(idx.size());
  for (const auto& cube : idx) {
    Vec9 v;
    for (int a = 0; a < 9; ++a)
      v(a) = (static_cast<double>(cube[a]) + 0.5) * scale;
    pts.push_back(v);
  }
  return PointSet::uniform(std::move(pts));
}

// The same construction run inside the 3-dimensional invariant subspace
// with deficient projections (coordinates as in obstruction_witness),
// embedded into the 9 representation coordinates; the remaining
// coordinates are exactly zero.  Only defined for the split form.
inline PointSet gen_obstructed(const Form& f, double alpha, int depth,
                               std::uint64_t seed,
                               std::int64_t max_points = kDefaultMaxPoints) {
  const ObstructionWitness wit = obstruction_witness(f);  // throws on (3,1)
  detail::check_cantor_args(3, alpha, depth, max_points);
  std::array<int, 3> slots{};
  for (int k = 0; k < 3; ++k) {
    int slot = -1;
    for (int i = 0; i < 9; ++i)
      if (wit.w_inv[k](i) == 1.0) slot = i;
    if (slot < 0)
      throw fractal_error("gen_obstructed: non-coordinate witness basis");
    slots[k] = slot;
  }
  Rng rng(seed);
  auto idx = detail::cantor_indices(3, alpha, depth, rng, max_points);
  const double scale = std::ldexp(1.0, -depth);
  std::vector<Vec9> pts;
  pts.reserve(idx.size());
  for (const auto& cube : idx) {
    Vec9 v = Vec9::Zero();
    for (int k = 0; k < 3; ++k)
      v(slots[k]) = (static_cast<double>(cube[k]) + 0.5) * scale;
    pts.push_back(v);
  }
  return PointSet::uniform(std::move(pts));
}

// Exact delta-net of a coordinate subspace: the grid {0, delta, ..., 1}
// on each selected coordinate axis, zero elsewhere, with delta = 2^-m.
// Its covering number at scale delta is exactly its cardinality.
inline PointSet gen_subspace_net(const std::vector<int>& dims,
                                 int neg_log2_delta,
                                 std::int64_t max_points = kDefaultMaxPoints) {
  if (dims.empty()) throw fractal_error("gen_subspace_net: no axes selected");
  std::vector<int> sorted = dims;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i] < 0 || sorted[i] > 8)
      throw fractal_error("gen_subspace_net: axis out of range");
    if (i > 0 && sorted[i] == sorted[i - 1])
      throw fractal_error("gen_subspace_net: repeated axis");
  }
  if (neg_log2_delta < 1)
    throw fractal_error("gen_subspace_net: delta must be a power of 2 < 1");
  const std::int64_t per_axis = (std::int64_t{1} << neg_log2_delta) + 1;
  double projected = std::pow(static_cast<double>(per_axis),
                              static_cast<double>(sorted.size()));
  if (projected > static_cast<double>(max_points))
    throw fractal_size_error(
        "gen_subspace_net: projected count exceeds the cap");
  const double delta = std::ldexp(1.0, -neg_log2_delta);
  std::vector<Vec9> pts;
  pts.reserve(static_cast<std::size_t>(projected));
  std::vector<std::int64_t> counter(sorted.size(), 0);
  for (;;) {
    Vec9 v = Vec9::Zero();
    for (std::size_t k = 0; k < sorted.size(); ++k)
      v(sorted[k]) = static_cast<double>(counter[k]) * delta;
    pts.push_back(v);
    std::size_t k = 0;
    while (k < sorted.size() && ++counter[k] == per_axis) counter[k++] = 0;
    if (k == sorted.size()) break;
  }
  return PointSet::uniform(std::move(pts));
}

inline PointSet gen_grid(const std::vector<int>& dims, int neg_log2_delta,
                         std::int64_t max_points = kDefaultMaxPoints) {
  return gen_subspace_net(dims, neg_log2_delta, max_points);
}

// Frostman diagnostic against dyadic cubes: the maximum over levels
// 0..depth and occupied cubes of mass(cube) / side^alpha.  Runs in
// O(n * depth) and is the invariant the generators are checked against
// (ball-based constants carry an extra geometric factor of up to 3^9
// already for the full grid).
inline double dyadic_frostman_constant(const PointSet& f, double alpha,
                                       int depth) {
  if (!(alpha > 0.0)) throw fractal_error("dyadic frostman: alpha <= 0");
  if (depth < 1) throw fractal_error("dyadic frostman: depth must be >= 1");
  double best = 1.0;  // level 0: total mass over 1^alpha
  for (int level = 1; level <= depth; ++level) {
    TubePartition p = TubePartition::cube(level);
    std::unordered_map<AtomKey, double, AtomKeyHash> mass;
    mass.reserve(f.size());
    for (std::size_t i = 0; i < f.size(); ++i)
      mass[atom_key(p, f.points[i])] += f.weights[i];
    const double inv_vol = std::exp2(static_cast<double>(level) * alpha);
    for (const auto& [key, m] : mass) best = std::max(best, m * inv_vol);
  }
  return best;
}

// Ball-based Frostman constant restricted to a random subsample of
// centers (full mass sums): a lower estimate of frostman_constant usable
// on sets too large for the quadratic exact scan.
inline double frostman_constant_sampled(const PointSet& f, double alpha,
                                        double delta_min, int n_centers,
                                        std::uint64_t seed) {
  if (!(alpha > 0.0 && alpha < 9.0))
    throw fractal_error("frostman_constant_sampled: alpha must be in (0, 9)");
  if (!(delta_min > 0.0 && delta_min < 1.0))
    throw fractal_error(
        "frostman_constant_sampled: delta_min must be in (0, 1)");
  if (n_centers < 1)
    throw fractal_error("frostman_constant_sampled: need >= 1 center");
  std::vector<std::size_t> centers;
  if (static_cast<std::size_t>(n_centers) >= f.size()) {
    centers.resize(f.size());
    std::iota(centers.begin(), centers.end(), std::size_t{0});
  } else {
    Rng rng(seed);
    for (int i = 0; i < n_centers; ++i)
      centers.push_back(static_cast<std::size_t>(rng.below(f.size())));
  }
  double best = 0.0;
  for (std::size_t i : centers) {
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

// Least-squares slope of log2 covering number against the scale exponent
// m (cube partitions 2^-m, m in [m_lo, m_hi]): the empirical box
// dimension of the set over that range of scales.
inline double covering_exponent_fit(const PointSet& f, int m_lo, int m_hi) {
  if (m_lo < 1 || m_hi <= m_lo)
    throw fractal_error("covering_exponent_fit: need 1 <= m_lo < m_hi");
  const int n = m_hi - m_lo + 1;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (int m = m_lo; m <= m_hi; ++m) {
    double x = m;
    double y = std::log2(static_cast<double>(
        covering_number(f, TubePartition::cube(m))));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace r9
