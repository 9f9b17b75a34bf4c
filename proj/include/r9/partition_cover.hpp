// Finite point sets in the 9-dimensional representation, anisotropic tube
// partitions, covering numbers, atom enumeration, and refinement constants.
//
// A tube partition is determined by a base scale delta (an exact power of
// two) and a nondecreasing 5-tuple of exponents r1..r5 (multiples of 1/64):
// the coordinate of weight lambda is boxed at scale delta^{r_{lambda+3}}.
// Every atom scale is therefore an exact power of 2^{1/64} and atom keys
// can be computed without boundary jitter.
#pragma once

#include "r9/linalg.hpp"
#include "r9/weight_rep.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace r9 {

struct partition_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// -------------------------------------------------------------------------
// PointSet: finite weighted multiset of coordinate vectors.

struct PointSet {
  std::vector<Vec9> points;
  std::vector<double> weights;  // normalized to sum 1

  static PointSet uniform(std::vector<Vec9> pts) {
    if (pts.empty()) throw partition_error("PointSet: empty");
    PointSet ps;
    ps.weights.assign(pts.size(), 1.0 / static_cast<double>(pts.size()));
    ps.points = std::move(pts);
    return ps;
  }

  static PointSet weighted(std::vector<Vec9> pts, std::vector<double> w) {
    if (pts.empty()) throw partition_error("PointSet: empty");
    if (pts.size() != w.size())
      throw partition_error("PointSet: weight count mismatch");
    double total = 0.0;
    for (double x : w) {
      if (!(x > 0.0)) throw partition_error("PointSet: weights must be > 0");
      total += x;
    }
    for (double& x : w) x /= total;
    PointSet ps;
    ps.points = std::move(pts);
    ps.weights = std::move(w);
    return ps;
  }

  std::size_t size() const { return points.size(); }

  bool weights_normalized(double tol = 1e-12) const {
    double total = 0.0;
    for (double x : weights) total += x;
    return std::abs(total - 1.0) <= tol;
  }
};

// CSV serialization: 9 coordinate columns plus an optional weight column,
// written with 17 significant digits so doubles round-trip exactly.
inline void save_csv(const PointSet& ps, const std::string& path,
                     bool with_weights = true) {
  std::ofstream out(path);
  if (!out) throw partition_error("save_csv: cannot open " + path);
  out << "c1,c2,c3,c4,c5,c6,c7,c8,c9";
  if (with_weights) out << ",weight";
  out << "\n";
  char buf[32];
  for (std::size_t i = 0; i < ps.size(); ++i) {
    for (int j = 0; j < 9; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", ps.points[i](j));
      out << (j ? "," : "") << buf;
    }
    if (with_weights) {
      std::snprintf(buf, sizeof buf, "%.17g", ps.weights[i]);
      out << "," << buf;
    }
    out << "\n";
  }
}

inline PointSet load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw partition_error("load_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw partition_error("load_csv: empty file");
  bool with_weights = line.find("weight") != std::string::npos;
  std::vector<Vec9> pts;
  std::vector<double> wts;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    Vec9 v;
    for (int j = 0; j < 9; ++j) {
      if (!std::getline(ss, cell, ','))
        throw partition_error("load_csv: short row");
      v(j) = std::stod(cell);
    }
    pts.push_back(v);
    if (with_weights) {
      if (!std::getline(ss, cell, ','))
        throw partition_error("load_csv: missing weight");
      wts.push_back(std::stod(cell));
    }
  }
  return with_weights ? PointSet::weighted(std::move(pts), std::move(wts))
                      : PointSet::uniform(std::move(pts));
}

// -------------------------------------------------------------------------
// RTuple: nondecreasing exponent 5-tuple, multiples of 1/64 in [0, 1].
// Stored as integer numerators over 64 so the tuple algebra is exact.

struct RTuple {
  std::array<int, 5> r64;  // r_i = r64[i] / 64

  static RTuple of(double r1, double r2, double r3, double r4, double r5) {
    std::array<double, 5> r = {r1, r2, r3, r4, r5};
    RTuple t{};
    for (int i = 0; i < 5; ++i) {
      double scaled = r[i] * 64.0;
      double rounded = std::round(scaled);
      if (std::abs(scaled - rounded) > 1e-9)
        throw partition_error("RTuple: entries must be multiples of 1/64");
      t.r64[i] = static_cast<int>(rounded);
      if (t.r64[i] < 0 || t.r64[i] > 64)
        throw partition_error("RTuple: entries must lie in [0, 1]");
      if (i > 0 && t.r64[i] < t.r64[i - 1])
        throw partition_error("RTuple: entries must be nondecreasing");
    }
    return t;
  }

  static RTuple cube() { return of(1, 1, 1, 1, 1); }

  double operator[](int i) const { return r64[i] / 64.0; }

  friend bool operator==(const RTuple& a, const RTuple& b) {
    return a.r64 == b.r64;
  }
};

// Componentwise max / min (both preserve monotonicity).
inline RTuple tuple_join(const RTuple& a, const RTuple& b) {
  RTuple t{};
  for (int i = 0; i < 5; ++i) t.r64[i] = std::max(a.r64[i], b.r64[i]);
  return t;
}

inline RTuple tuple_meet(const RTuple& a, const RTuple& b) {
  RTuple t{};
  for (int i = 0; i < 5; ++i) t.r64[i] = std::min(a.r64[i], b.r64[i]);
  return t;
}

// -------------------------------------------------------------------------
// TubePartition and atom keys.

struct AtomKey {
  std::array<std::int64_t, 9> idx;

  friend bool operator==(const AtomKey& a, const AtomKey& b) {
    return a.idx == b.idx;
  }
};

struct AtomKeyHash {
  std::size_t operator()(const AtomKey& k) const {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (std::int64_t v : k.idx) {
      std::uint64_t z = h + static_cast<std::uint64_t>(v) +
                        0x9e3779b97f4a7c15ULL;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      h = z ^ (z >> 31);
    }
    return static_cast<std::size_t>(h);
  }
};

namespace detail {

// 2^{k/64} for k in [0, 64); the correctly rounded doubles.
inline double pow2_frac64(int k) {
  static const std::array<double, 64> table = [] {
    std::array<double, 64> t{};
    for (int i = 0; i < 64; ++i) t[i] = std::exp2(i / 64.0);
    return t;
  }();
  return table[k];
}

}  // namespace detail

struct TubePartition {
  int neg_log2_delta;  // delta = 2^{-m}, m >= 1
  RTuple rt;

  static TubePartition make(int neg_log2_delta, const RTuple& rt) {
    if (neg_log2_delta < 1)
      throw partition_error("TubePartition: delta must be a power of 2 < 1");
    return TubePartition{neg_log2_delta, rt};
  }

  static TubePartition cube(int neg_log2_delta) {
    return make(neg_log2_delta, RTuple::cube());
  }

  double delta() const { return std::ldexp(1.0, -neg_log2_delta); }

  // Scale exponent of coordinate i in units of 1/64: the coordinate is
  // boxed at scale 2^{-e/64} where e = m * 64 * r_{weight+3}.
  int scale_exp64(int coord) const {
    return neg_log2_delta * rt.r64[kWeights[coord] + 2];
  }

  double scale(int coord) const {
    int e = scale_exp64(coord);
    return std::ldexp(1.0 / detail::pow2_frac64(e % 64), -(e / 64));
  }

  // log2 of the atom volume, exact, in units of 1/64 (always <= 0).
  std::int64_t log2_volume_64() const {
    std::int64_t total = 0;
    for (int i = 0; i < 9; ++i) total -= scale_exp64(i);
    return total;
  }
};

// Per-coordinate floor index of the half-open box containing w, boxes
// anchored at the origin.  Division by the scale 2^{-e/64} is computed as
// c * 2^{e/64} = ldexp(c * 2^{(e mod 64)/64}, e / 64); when the scale is an
// exact power of two (e mod 64 == 0) this is exact.
inline AtomKey atom_key(const TubePartition& p, const Vec9& w) {
  AtomKey key{};
  for (int i = 0; i < 9; ++i) {
    double c = w(i);
    if (!std::isfinite(c)) throw partition_error("atom_key: nonfinite");
    int e = p.scale_exp64(i);
    double scaled = std::ldexp(c * detail::pow2_frac64(e % 64), e / 64);
    key.idx[i] = static_cast<std::int64_t>(std::floor(scaled));
  }
  return key;
}

// Number of distinct atoms of p meeting A.
inline std::int64_t covering_number(const PointSet& a,
                                    const TubePartition& p) {
  std::unordered_set<AtomKey, AtomKeyHash> keys;
  keys.reserve(a.size());
  for (const Vec9& w : a.points) keys.insert(atom_key(p, w));
  return static_cast<std::int64_t>(keys.size());
}

// Common refinement (finer in every coordinate): componentwise max of the
// exponent tuples.  Requires the same base scale.
inline TubePartition join(const TubePartition& p, const TubePartition& q) {
  if (p.neg_log2_delta != q.neg_log2_delta)
    throw partition_error("join: base scales differ");
  return TubePartition{p.neg_log2_delta, tuple_join(p.rt, q.rt)};
}

// Common coarsening: componentwise min of the exponent tuples.
inline TubePartition meet(const TubePartition& p, const TubePartition& q) {
  if (p.neg_log2_delta != q.neg_log2_delta)
    throw partition_error("meet: base scales differ");
  return TubePartition{p.neg_log2_delta, tuple_meet(p.rt, q.rt)};
}

// Exact number of atoms of the finer partition p inside one atom of the
// coarser partition q: the product over coordinates of ceil(scale ratio).
// Requires every coordinate scale of q to be >= the one of p.
inline std::int64_t refinement_constant(const TubePartition& p,
                                        const TubePartition& q) {
  std::int64_t total = 1;
  for (int i = 0; i < 9; ++i) {
    int d = p.neg_log2_delta * p.rt.r64[kWeights[i] + 2] -
            q.neg_log2_delta * q.rt.r64[kWeights[i] + 2];
    if (d < 0)
      throw partition_error(
          "refinement_constant: partitions incomparable (q finer in a "
          "coordinate)");
    std::int64_t ratio;
    if (d % 64 == 0) {
      ratio = std::int64_t{1} << (d / 64);
    } else {
      // The true ratio 2^{d/64} is irrational here, so the ceiling is
      // insensitive to the last-bit rounding of the long double pow.
      ratio = static_cast<std::int64_t>(
          std::ceil(std::exp2(static_cast<long double>(d) / 64.0L)));
    }
    total *= ratio;
  }
  return total;
}

}  // namespace r9
