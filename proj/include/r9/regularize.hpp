// Regularity predicates over partition filtrations, Bourgain-style
// regularization of sets and weighted sets, the exhaust decomposition into
// regular pieces, and submodular subset selection.
#pragma once

#include "r9/partition_cover.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

namespace r9 {

struct regularize_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct selection_failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// -------------------------------------------------------------------------
// Filtration: strictly refining chain of tube partitions with analytic
// branching exponents d_i = log2 of the refinement constant of level i over
// level i-1.

struct Filtration {
  std::vector<TubePartition> levels;  // P_0 < ... < P_n
  std::vector<double> branching;      // d_1..d_n

  static Filtration of(std::vector<TubePartition> parts) {
    if (parts.size() < 2)
      throw regularize_error("Filtration: need at least two levels");
    Filtration f;
    for (std::size_t i = 1; i < parts.size(); ++i) {
      std::int64_t l;
      try {
        l = refinement_constant(parts[i], parts[i - 1]);
      } catch (const partition_error&) {
        throw regularize_error("Filtration: levels must strictly refine");
      }
      if (l < 2)
        throw regularize_error("Filtration: levels must strictly refine");
      f.branching.push_back(std::log2(static_cast<double>(l)));
    }
    f.levels = std::move(parts);
    return f;
  }

  int depth() const { return static_cast<int>(levels.size()) - 1; }
};

struct SigmaTuple {
  std::vector<double> sigma;  // sigma_1..sigma_n, each in [1, d_i + 1]

  static SigmaTuple of(std::vector<double> s, const Filtration& f) {
    if (s.size() != f.branching.size())
      throw regularize_error("SigmaTuple: length mismatch");
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s[i] < 1.0 || s[i] > f.branching[i] + 1.0)
        throw regularize_error("SigmaTuple: entry out of [1, d_i + 1]");
    return SigmaTuple{std::move(s)};
  }
};

namespace detail {

// Group the member indices of a point set by their atom at a level.
inline std::map<std::array<std::int64_t, 9>, std::vector<int>> atoms_of(
    const PointSet& a, const TubePartition& p,
    const std::vector<int>& members) {
  std::map<std::array<std::int64_t, 9>, std::vector<int>> buckets;
  for (int idx : members) buckets[atom_key(p, a.points[idx]).idx].push_back(idx);
  return buckets;
}

inline std::vector<int> all_indices(const PointSet& a) {
  std::vector<int> idx(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) idx[i] = static_cast<int>(i);
  return idx;
}

inline std::int64_t count_atoms(const PointSet& a, const TubePartition& p,
                                const std::vector<int>& members) {
  std::unordered_set<AtomKey, AtomKeyHash> keys;
  for (int i : members) keys.insert(atom_key(p, a.points[i]));
  return static_cast<std::int64_t>(keys.size());
}

// -log2 of a mass ratio, snapped to the nearest integer when within 1e-9.
// Uniform weights put parent/child ratios exactly on dyadic boundaries; the
// snap makes the classification invariant under the floating-point jitter
// introduced by renormalizing subset weights, so the regularizer and the
// predicate always agree on boundary ratios.
inline double ratio_exponent(double ratio) {
  double x = -std::log2(ratio);
  double xr = std::round(x);
  return std::abs(x - xr) < 1e-9 ? xr : x;
}

inline PointSet subset(const PointSet& a, const std::vector<int>& members) {
  std::vector<Vec9> pts;
  std::vector<double> w;
  for (int i : members) {
    pts.push_back(a.points[i]);
    w.push_back(a.weights[i]);
  }
  return PointSet::weighted(std::move(pts), std::move(w));
}

}  // namespace detail

// -------------------------------------------------------------------------
// Regularity predicates.  Both are exact integer/rational checks.

// Set regularity: every occupied coarse atom at level i-1 branches into a
// number of level-i atoms inside [2^{sigma_i - 1}, 2^{sigma_i}).
inline bool is_regular_set(const PointSet& a, const Filtration& f,
                           const SigmaTuple& st) {
  auto members = detail::all_indices(a);
  for (int i = 1; i <= f.depth(); ++i) {
    double lo = std::exp2(st.sigma[i - 1] - 1.0);
    double hi = std::exp2(st.sigma[i - 1]);
    for (const auto& [key, group] :
         detail::atoms_of(a, f.levels[i - 1], members)) {
      auto count = static_cast<double>(
          detail::count_atoms(a, f.levels[i], group));
      if (!(lo <= count && count < hi)) return false;
    }
  }
  return true;
}

// Measure regularity: every occupied parent/child mass ratio at level i lies
// in (2^{-sigma_i}, 2^{-sigma_i + 1}].
inline bool is_regular_measure(const PointSet& a, const Filtration& f,
                               const SigmaTuple& st) {
  auto members = detail::all_indices(a);
  for (int i = 1; i <= f.depth(); ++i) {
    double sigma = st.sigma[i - 1];
    for (const auto& [pkey, group] :
         detail::atoms_of(a, f.levels[i - 1], members)) {
      double parent_mass = 0.0;
      for (int idx : group) parent_mass += a.weights[idx];
      for (const auto& [ckey, child] :
           detail::atoms_of(a, f.levels[i], group)) {
        double child_mass = 0.0;
        for (int idx : child) child_mass += a.weights[idx];
        // ratio in (2^{-sigma}, 2^{-sigma+1}]  <=>  sigma-1 <= x < sigma
        // for x = -log2(ratio).
        double x = detail::ratio_exponent(child_mass / parent_mass);
        if (!(sigma - 1.0 <= x && x < sigma)) return false;
      }
    }
  }
  return true;
}

// -------------------------------------------------------------------------
// Bourgain regularization, set version.  Levels are processed finest to
// coarsest; at level i the occupied parents are split into dyadic classes
// by branching count and the class with the largest surviving finest-atom
// count wins (ties to the smaller class).  Selecting whole parents keeps
// deeper levels intact, so one pass per level suffices.

struct RegularizedSet {
  PointSet subset;
  SigmaTuple sigma;
  std::vector<int> kept_indices;  // indices into the input
};

inline RegularizedSet bourgain_regularize_set(const PointSet& a,
                                              const Filtration& f) {
  auto members = detail::all_indices(a);
  int n = f.depth();
  std::vector<double> sigma(static_cast<std::size_t>(n), 1.0);
  for (int i = n; i >= 1; --i) {
    auto parents = detail::atoms_of(a, f.levels[i - 1], members);
    // class j holds parents whose branching count is in [2^j, 2^{j+1}).
    std::map<int, std::vector<int>> classes;  // j -> member indices
    for (const auto& [key, group] : parents) {
      auto count = detail::count_atoms(a, f.levels[i], group);
      int j = static_cast<int>(std::floor(std::log2(
          static_cast<double>(count))));
      auto& cls = classes[j];
      cls.insert(cls.end(), group.begin(), group.end());
    }
    int best_j = -1;
    std::int64_t best_count = -1;
    for (const auto& [j, cls] : classes) {
      std::int64_t fine = detail::count_atoms(a, f.levels[n], cls);
      if (fine > best_count) {  // ties: smaller j wins (map order)
        best_count = fine;
        best_j = j;
      }
    }
    members = classes[best_j];
    sigma[static_cast<std::size_t>(i - 1)] = best_j + 1.0;
  }
  std::sort(members.begin(), members.end());
  return RegularizedSet{detail::subset(a, members), SigmaTuple::of(sigma, f),
                        members};
}

// -------------------------------------------------------------------------
// Bourgain regularization, measure version.  Levels are processed finest to
// coarsest.  Per level: children of mass ratio <= 2^{-(floor(d_i) + 1)} are
// discarded (at most half the mass), the remaining children are classified
// by dyadic ratio class, and the heaviest class is kept; because removing
// siblings inflates the surviving conditional ratios, the level is repeated
// until it is stable under the recomputed ratios (each unstable pass
// removes at least one atom, so this terminates).

inline RegularizedSet bourgain_regularize_measure(const PointSet& a,
                                                  const Filtration& f) {
  auto members = detail::all_indices(a);
  int n = f.depth();
  std::vector<double> sigma(static_cast<std::size_t>(n), 1.0);
  for (int i = n; i >= 1; --i) {
    int cutoff = static_cast<int>(std::floor(f.branching[i - 1])) + 1;
    while (true) {
      auto parents = detail::atoms_of(a, f.levels[i - 1], members);
      std::map<int, std::vector<int>> classes;  // ratio class -> indices
      for (const auto& [pkey, group] : parents) {
        double parent_mass = 0.0;
        for (int idx : group) parent_mass += a.weights[idx];
        for (const auto& [ckey, child] :
             detail::atoms_of(a, f.levels[i], group)) {
          double child_mass = 0.0;
          for (int idx : child) child_mass += a.weights[idx];
          // ratio in (2^{-j}, 2^{-j+1}] -> class j = floor(x) + 1 with
          // x = -log2(ratio) (boundary-snapped).
          double x = detail::ratio_exponent(child_mass / parent_mass);
          int j = static_cast<int>(std::floor(x)) + 1;
          if (j > cutoff) continue;  // tail class: discard
          auto& cls = classes[j];
          cls.insert(cls.end(), child.begin(), child.end());
        }
      }
      if (classes.empty())
        throw selection_failure(
            "bourgain_regularize_measure: all mass discarded");
      int best_j = -1;
      double best_mass = -1.0;
      for (const auto& [j, cls] : classes) {
        double mass = 0.0;
        for (int idx : cls) mass += a.weights[idx];
        if (mass > best_mass) {  // ties: smaller j wins (map order)
          best_mass = mass;
          best_j = j;
        }
      }
      bool stable = classes.size() == 1 &&
                    members.size() == classes[best_j].size();
      members = classes[best_j];
      sigma[static_cast<std::size_t>(i - 1)] = best_j;
      if (stable) break;
    }
  }
  std::sort(members.begin(), members.end());
  return RegularizedSet{detail::subset(a, members), SigmaTuple::of(sigma, f),
                        members};
}

// Mass of the kept part under the input's own weights.
inline double kept_mass(const PointSet& a, const RegularizedSet& r) {
  double m = 0.0;
  for (int i : r.kept_indices) m += a.weights[i];
  return m;
}

// The guaranteed lower bound prod 1 / (2 (1 + d_i)).
inline double regularization_mass_bound(const Filtration& f) {
  double b = 1.0;
  for (double d : f.branching) b /= 2.0 * (1.0 + d);
  return b;
}

// -------------------------------------------------------------------------
// Exhaust decomposition: iterate the measure regularization on the residual
// until the leftover mass drops below c.

inline std::vector<RegularizedSet> regular_exhaust(const PointSet& a,
                                                   const Filtration& f,
                                                   double c) {
  if (!(c > 0.0 && c < 1.0))
    throw regularize_error("regular_exhaust: c must be in (0,1)");
  std::vector<RegularizedSet> out;
  std::vector<int> residual = detail::all_indices(a);
  double residual_mass = 1.0;
  while (residual_mass >= c && !residual.empty()) {
    PointSet current = detail::subset(a, residual);
    RegularizedSet piece = bourgain_regularize_measure(current, f);
    // Map indices back to the original set and carve the residual.
    std::vector<int> original_kept;
    for (int local : piece.kept_indices) original_kept.push_back(residual[local]);
    piece.kept_indices = original_kept;
    piece.subset = detail::subset(a, original_kept);
    std::vector<int> next;
    std::size_t k = 0;
    for (int idx : residual) {
      if (k < original_kept.size() && original_kept[k] == idx) {
        ++k;
      } else {
        next.push_back(idx);
      }
    }
    residual = std::move(next);
    residual_mass = 0.0;
    for (int idx : residual) residual_mass += a.weights[idx];
    out.push_back(std::move(piece));
  }
  return out;
}

// -------------------------------------------------------------------------
// Submodular selection: with R = join(P, Q) and S = meet(P, Q), keep S-atoms
// of largest local R-count until (1-c) of the R-count is retained, then
// verify both contract inequalities.  Falls back to exhaustive subset search
// when the heuristic fails and the S-atom count is small.

struct SubmodularReport {
  PointSet selected;
  std::vector<int> kept_indices;
  std::int64_t count_p, count_q, count_r, count_r_selected, count_s_selected;
  bool retention_ok;   // |A'|_R >= (1-c)|A|_R
  bool inequality_ok;  // |A|_P |A|_Q >= (c^2/4) |A|_R |A'|_S
};

namespace detail {

inline bool submodular_verify(const PointSet& a, const std::vector<int>& kept,
                              const TubePartition& r, const TubePartition& s,
                              double c, SubmodularReport& rep) {
  rep.count_r_selected = count_atoms(a, r, kept);
  rep.count_s_selected = count_atoms(a, s, kept);
  rep.retention_ok = static_cast<double>(rep.count_r_selected) >=
                     (1.0 - c) * static_cast<double>(rep.count_r);
  rep.inequality_ok =
      static_cast<double>(rep.count_p) * static_cast<double>(rep.count_q) >=
      (c * c / 4.0) * static_cast<double>(rep.count_r) *
          static_cast<double>(rep.count_s_selected);
  return rep.retention_ok && rep.inequality_ok;
}

}  // namespace detail

inline SubmodularReport submodular_select(const PointSet& a,
                                          const TubePartition& p,
                                          const TubePartition& q, double c) {
  if (!(c > 0.0 && c < 1.0))
    throw regularize_error("submodular_select: c must be in (0,1)");
  TubePartition r = join(p, q);
  TubePartition s = meet(p, q);
  auto members = detail::all_indices(a);
  SubmodularReport rep{};
  rep.count_p = detail::count_atoms(a, p, members);
  rep.count_q = detail::count_atoms(a, q, members);
  rep.count_r = detail::count_atoms(a, r, members);

  // S-atoms ranked by local R-count, largest first.
  auto satoms = detail::atoms_of(a, s, members);
  std::vector<std::pair<std::int64_t, std::vector<int>>> ranked;
  for (auto& [key, group] : satoms)
    ranked.emplace_back(detail::count_atoms(a, r, group), group);
  std::sort(ranked.begin(), ranked.end(),
            [](const auto& x, const auto& y) { return x.first > y.first; });

  std::vector<int> kept;
  std::int64_t running = 0;
  double target = (1.0 - c) * static_cast<double>(rep.count_r);
  for (auto& [cnt, group] : ranked) {
    kept.insert(kept.end(), group.begin(), group.end());
    running += cnt;  // S-atoms are disjoint, so local R-counts add
    if (static_cast<double>(running) >= target) break;
  }
  std::sort(kept.begin(), kept.end());
  if (detail::submodular_verify(a, kept, r, s, c, rep)) {
    rep.selected = detail::subset(a, kept);
    rep.kept_indices = kept;
    return rep;
  }

  // Heuristic failed: exhaustive search over S-atom subsets when feasible.
  if (ranked.size() <= 20) {
    for (std::uint32_t mask = 1; mask < (1u << ranked.size()); ++mask) {
      std::vector<int> cand;
      for (std::size_t b = 0; b < ranked.size(); ++b)
        if (mask & (1u << b))
          cand.insert(cand.end(), ranked[b].second.begin(),
                      ranked[b].second.end());
      std::sort(cand.begin(), cand.end());
      if (detail::submodular_verify(a, cand, r, s, c, rep)) {
        rep.selected = detail::subset(a, cand);
        rep.kept_indices = cand;
        return rep;
      }
    }
  }
  throw selection_failure(
      "submodular_select: no subset satisfied the contract (selection bug)");
}

}  // namespace r9
