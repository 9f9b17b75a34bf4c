// Non-degeneracy toolkit for the horospherical action on the 9-dimensional
// representation: stacked projection matrices, the polynomials P1, P2, R1, R2
// measuring transversality of translated flag pieces, the kernel vectors
// V1, V2, W1, W2 with their extreme-weight components S1, S2, L1, L2, the
// moment curves with derivative jets and Wronskians, sublevel-measure
// (Remez-type) scans, and the explicit obstruction subspaces.
#pragma once

#include "r9/linalg.hpp"
#include "r9/rng.hpp"
#include "r9/weight_rep.hpp"

#include <json.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace r9 {

struct nondeg_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Raised when a kernel-vector construction is requested at a pair where the
// governing polynomial is below the rank threshold.
struct degenerate_pair_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A pair (u_{r1,s1}, u_{r2,s2}) of horospherical elements.
struct UPair {
  double r1 = 0.0, s1 = 0.0, r2 = 0.0, s2 = 0.0;
};

inline constexpr double kDefaultRankTau = 1e-8;

// ---------------------------------------------------------------------------
// Stacked projection matrices.

// Rows lambda..top of Ad(u): the matrix of pi_flag(lambda) o Ad(u) with the
// zero rows removed, i.e. the flag_dim(lambda) x 9 block computing the
// flag component of the translated vector.
inline MatX flag_rows(const Mat9& ad, int lambda) {
  int off = kWeightOffsets[lambda + 2];
  return ad.block(off, 0, 9 - off, 9);
}

// Vertical stack of the flag-projection blocks for (optionally the identity
// and) u1, u2.  For lambda = 1 without identity this is the 6 x 9 matrix
// whose row space is u1^t.r^(1) + u2^t.r^(1); with identity it is 9 x 9 and
// the row space gains r^(1) itself.  lambda = 0 gives the 6-row blocks.
inline MatX t_matrix(const Form& f, const UPair& p, int lambda,
                     bool include_identity) {
  if (lambda != 0 && lambda != 1)
    throw nondeg_error("t_matrix: lambda must be 0 or 1");
  int rows_per = flag_dim(lambda);
  int blocks = include_identity ? 3 : 2;
  MatX t(rows_per * blocks, 9);
  int at = 0;
  if (include_identity) {
    t.block(at, 0, rows_per, 9) = flag_rows(Mat9::Identity(), lambda);
    at += rows_per;
  }
  t.block(at, 0, rows_per, 9) = flag_rows(ad_u(f, p.r1, p.s1), lambda);
  at += rows_per;
  t.block(at, 0, rows_per, 9) = flag_rows(ad_u(f, p.r2, p.s2), lambda);
  return t;
}

// 9 x 9 matrix whose columns are bases of u_i^{-1}.r_{<= -1} for
// u_0 = id, u_1, u_2: columns 0..2 of Ad(u_i^{-1}) in the weight basis.
// Its column span is the orthogonal complement of the triple intersection
// of the translated upper flags r^(>= 0).
inline Mat9 stacked_lower_flags(const Form& f, const UPair& p) {
  Mat9 m;
  m.block(0, 0, 9, 3) = Mat9::Identity().block(0, 0, 9, 3);
  m.block(0, 3, 9, 3) = ad_u(f, -p.r1, -p.s1).block(0, 0, 9, 3);
  m.block(0, 6, 9, 3) = ad_u(f, -p.r2, -p.s2).block(0, 0, 9, 3);
  return m;
}

// ---------------------------------------------------------------------------
// Sums of squares of k x k minors: exact enumeration and the elementary
// symmetric surrogate e_k(sigma_i^2), cross-checked in the tests.

namespace detail {

inline void subsets_rec(int n, int k, int start, std::vector<int>& cur,
                        const std::function<void(const std::vector<int>&)>& f) {
  if (static_cast<int>(cur.size()) == k) {
    f(cur);
    return;
  }
  for (int i = start; i <= n - (k - static_cast<int>(cur.size())); ++i) {
    cur.push_back(i);
    subsets_rec(n, k, i + 1, cur, f);
    cur.pop_back();
  }
}

inline void for_each_subset(int n, int k,
                            const std::function<void(const std::vector<int>&)>&
                                f) {
  std::vector<int> cur;
  subsets_rec(n, k, 0, cur, f);
}

// Elementary symmetric polynomial e_k of the entries.
inline double elementary_symmetric(const VecX& vals, int k) {
  std::vector<double> e(static_cast<std::size_t>(k) + 1, 0.0);
  e[0] = 1.0;
  for (int i = 0; i < vals.size(); ++i)
    for (int j = std::min<int>(k, i + 1); j >= 1; --j)
      e[static_cast<std::size_t>(j)] +=
          vals(i) * e[static_cast<std::size_t>(j) - 1];
  return e[static_cast<std::size_t>(k)];
}

}  // namespace detail

// Exact sum of squares of all k x k minors of a (rows x cols) matrix.
inline double minor_square_sum(const MatX& m, int k) {
  if (k < 1 || k > m.rows() || k > m.cols())
    throw nondeg_error("minor_square_sum: invalid minor size");
  double total = 0.0;
  detail::for_each_subset(
      static_cast<int>(m.rows()), k, [&](const std::vector<int>& rows) {
        detail::for_each_subset(
            static_cast<int>(m.cols()), k, [&](const std::vector<int>& cols) {
              MatX sub(k, k);
              for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j)
                  sub(i, j) = m(rows[static_cast<std::size_t>(i)],
                                cols[static_cast<std::size_t>(j)]);
              double d = sub.determinant();
              total += d * d;
            });
      });
  return total;
}

// The same quantity through the spectrum: the sum of squares of all k x k
// minors equals e_k of the eigenvalues of m^t m (squared singular values).
inline double minor_square_sum_spectral(const MatX& m, int k) {
  if (k < 1 || k > m.rows() || k > m.cols())
    throw nondeg_error("minor_square_sum_spectral: invalid minor size");
  MatX gram = m.transpose() * m;
  Eigen::SelfAdjointEigenSolver<MatX> es(gram, Eigen::EigenvaluesOnly);
  VecX ev = es.eigenvalues().cwiseMax(0.0);
  return detail::elementary_symmetric(ev, k);
}

// ---------------------------------------------------------------------------
// The four polynomials.  Each is a sum of squares of maximal-rank minors of
// the corresponding stacked matrix, so it is nonnegative, polynomial in
// (r1, s1, r2, s2), and vanishes exactly on the locus where the translated
// flags fail to be in general position.

// P1: 6 x 6 minors of the 6 x 9 two-block top-flag stack; vanishes iff
// u1^t.r^(1) + u2^t.r^(1) has dimension < 6.
inline double p1(const Form& f, const UPair& p) {
  MatX t = t_matrix(f, p, 1, false);
  // Mathematically a sum of squares; clamp the rounding of the Gram
  // determinant at zero.
  return std::max((t * t.transpose()).determinant(), 0.0);
}

// P2: 9 x 9 minors of the 12 x 9 two-block upper-flag stack; vanishes iff
// u1^t.r^(>=0) + u2^t.r^(>=0) has dimension < 9.
inline double p2(const Form& f, const UPair& p) {
  MatX t = t_matrix(f, p, 0, false);
  return std::max((t.transpose() * t).determinant(), 0.0);
}

// R1: 8 x 8 minors of the 9 x 9 three-block top-flag stack (identity, u1,
// u2).  The stacked matrix is always singular -- the three translated
// top flags span at most 8 dimensions -- so the 8 x 8 level is maximal;
// R1 vanishes iff the span drops below 8.
inline double r1(const Form& f, const UPair& p) {
  return minor_square_sum_spectral(t_matrix(f, p, 1, true), 8);
}

// R2: 8 x 8 minors of the stacked lower-flag basis matrix; vanishes iff the
// triple intersection r^(>=0) cap u1^t.r^(>=0) cap u2^t.r^(>=0) has
// dimension > 1 (the generic dimension is exactly 1).
inline double r2(const Form& f, const UPair& p) {
  return minor_square_sum_spectral(stacked_lower_flags(f, p), 8);
}

// ---------------------------------------------------------------------------
// Kernel vectors via adjugate columns.

namespace detail {

// Signed cofactor C_{ij} of a square matrix.
inline double cofactor(const MatX& m, int i, int j) {
  int n = static_cast<int>(m.rows());
  MatX sub(n - 1, n - 1);
  for (int r = 0, rr = 0; r < n; ++r) {
    if (r == i) continue;
    for (int c = 0, cc = 0; c < n; ++c) {
      if (c == j) continue;
      sub(rr, cc++) = m(r, c);
    }
    ++rr;
  }
  double d = sub.determinant();
  return ((i + j) % 2 == 0) ? d : -d;
}

// Kernel direction of a square matrix of corank one: the adjugate column
// containing the largest-magnitude cofactor (ties broken by the first
// index).  Columns of the adjugate lie in ker(m); for corank one the
// adjugate has rank one, so any nonzero column spans the kernel.  The
// result is normalized with a deterministic sign: the entry of largest
// magnitude is positive.
inline VecX adjugate_kernel(const MatX& m) {
  int n = static_cast<int>(m.rows());
  MatX adj(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) adj(j, i) = cofactor(m, i, j);
  int bi = 0, bj = 0;
  double best = -1.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      if (std::abs(adj(i, j)) > best) {
        best = std::abs(adj(i, j));
        bi = i;
        bj = j;
      }
  VecX v = adj.col(bj);
  double nv = v.norm();
  if (nv == 0.0) return v;
  v /= nv;
  if (v(bi) < 0.0) v = -v;
  return v;
}

// Embed a 3-vector into the top-flag slots 6..8.
inline Vec9 embed_top(const Eigen::Vector3d& v) {
  Vec9 out = Vec9::Zero();
  out.segment(6, 3) = v;
  return out;
}

// Embed a 3-vector into the bottom slots 0..2.
inline Vec9 embed_bottom(const Eigen::Vector3d& v) {
  Vec9 out = Vec9::Zero();
  out.segment(0, 3) = v;
  return out;
}

inline Vec9 normalize_signed(Vec9 v) {
  double n = v.norm();
  if (n == 0.0) return v;
  v /= n;
  int idx = 0;
  v.cwiseAbs().maxCoeff(&idx);
  if (v(idx) < 0.0) v = -v;
  return v;
}

}  // namespace detail

// A distinguished vector together with its extreme-weight component.
struct NVec {
  Vec9 vec;         // unit vector, deterministic sign
  double comp = 0;  // the recorded extreme-weight coordinate
};

// V1: spans the kernel of the 9 x 9 three-block top-flag stack, i.e. the
// orthogonal complement of r^(1) + u1^t.r^(1) + u2^t.r^(1).  Its recorded
// component S1 is the weight -2 coordinate.
inline NVec v1(const Form& f, const UPair& p, double tau = kDefaultRankTau) {
  if (!(r1(f, p) >= tau))
    throw degenerate_pair_error("v1: R1 below the rank threshold");
  VecX k = detail::adjugate_kernel(t_matrix(f, p, 1, true));
  NVec out;
  out.vec = k;
  out.comp = out.vec(0);
  return out;
}

// The 6 x 6 matrix of the map (v1, v2) |-> pi_{<=0}(u1^t v1 + u2^t v2) on
// pairs of top-flag vectors, in coordinates: the first six rows of the
// top-flag columns of Ad(u_i^t).
inline MatX intersection_map(const Form& f, const UPair& p) {
  Mat9 a1t = ad_ut(f, p.r1, p.s1);
  Mat9 a2t = ad_ut(f, p.r2, p.s2);
  MatX s(6, 6);
  s.block(0, 0, 6, 3) = a1t.block(0, 6, 6, 3);
  s.block(0, 3, 6, 3) = a2t.block(0, 6, 6, 3);
  return s;
}

// V2: spans the line r^(1) cap (u1^t.r^(1) + u2^t.r^(1)), built from the
// kernel of the intersection map.  Its recorded component S2 is the
// weight 2 coordinate.
inline NVec v2(const Form& f, const UPair& p, double tau = kDefaultRankTau) {
  if (!(p1(f, p) * r1(f, p) >= tau))
    throw degenerate_pair_error("v2: P1 * R1 below the rank threshold");
  VecX k = detail::adjugate_kernel(intersection_map(f, p));
  Vec9 sum = ad_ut(f, p.r1, p.s1) * detail::embed_top(k.head(3)) +
             ad_ut(f, p.r2, p.s2) * detail::embed_top(k.tail(3));
  NVec out;
  out.vec = detail::normalize_signed(sum);
  out.comp = out.vec(8);
  return out;
}

// W1: spans the line r^(>=0) cap u1^t.r^(>=0) cap u2^t.r^(>=0), realized as
// the left kernel of the stacked lower-flag basis matrix.  Its recorded
// component L1 is the weight 2 coordinate.
inline NVec w1(const Form& f, const UPair& p, double tau = kDefaultRankTau) {
  if (!(r2(f, p) >= tau))
    throw degenerate_pair_error("w1: R2 below the rank threshold");
  VecX k = detail::adjugate_kernel(
      MatX(stacked_lower_flags(f, p).transpose()));
  NVec out;
  out.vec = k;
  out.comp = out.vec(8);
  return out;
}

// The mirror intersection map on pairs of bottom-flag vectors:
// (v1, v2) |-> pi_{>=0}(u1^{-1} v1 + u2^{-1} v2), a 6 x 6 matrix.
inline MatX intersection_map_lower(const Form& f, const UPair& p) {
  Mat9 b1 = ad_u(f, -p.r1, -p.s1);
  Mat9 b2 = ad_u(f, -p.r2, -p.s2);
  MatX s(6, 6);
  s.block(0, 0, 6, 3) = b1.block(3, 0, 6, 3);
  s.block(0, 3, 6, 3) = b2.block(3, 0, 6, 3);
  return s;
}

// W2: spans the line r_{<=-1} cap (u1^{-1}.r_{<=-1} + u2^{-1}.r_{<=-1}).
// Its recorded component L2 is the weight -2 coordinate.
inline NVec w2(const Form& f, const UPair& p, double tau = kDefaultRankTau) {
  if (!(p2(f, p) * r2(f, p) >= tau))
    throw degenerate_pair_error("w2: P2 * R2 below the rank threshold");
  VecX k = detail::adjugate_kernel(intersection_map_lower(f, p));
  Vec9 sum = ad_u(f, -p.r1, -p.s1) * detail::embed_bottom(k.head(3)) +
             ad_u(f, -p.r2, -p.s2) * detail::embed_bottom(k.tail(3));
  NVec out;
  out.vec = detail::normalize_signed(sum);
  out.comp = out.vec(0);
  return out;
}

// ---------------------------------------------------------------------------
// Moment curves.

namespace detail {

struct Monomial {
  int a;     // degree in r
  int b;     // degree in s
  double c;  // coefficient
};

// Exact monomial tables of the nine pairing-vector components as
// polynomials in (r, s).
inline const std::array<std::vector<Monomial>, 9>& pre_curve_monomials(
    FormTag tag) {
  static const std::array<std::vector<Monomial>, 9> sig22 = {{
      {{0, 0, 1.0}},
      {{1, 0, 1.0}},
      {{2, 0, 0.5}},
      {{0, 1, 1.0}},
      {{1, 1, 1.0}},
      {{2, 1, 0.5}},
      {{0, 2, 0.5}},
      {{1, 2, 0.5}},
      {{2, 2, 0.5}},
  }};
  static const std::array<std::vector<Monomial>, 9> sig31 = {{
      {{0, 0, 1.0}},
      {{1, 0, -2.0}},
      {{0, 1, -2.0}},
      {{2, 0, 1.0}, {0, 2, 3.0}},
      {{0, 2, 1.0}, {2, 0, -1.0}},
      {{1, 1, -2.0}},
      {{3, 0, 1.0}, {1, 2, 1.0}},
      {{2, 1, 1.0}, {0, 3, 1.0}},
      {{4, 0, 0.25}, {2, 2, 0.5}, {0, 4, 0.25}},
  }};
  return tag == FormTag::Sig22 ? sig22 : sig31;
}

inline double binom(int n, int k) {
  double v = 1.0;
  for (int i = 0; i < k; ++i) v = v * (n - i) / (i + 1);
  return v;
}

}  // namespace detail

// Maximal degree in x of any curve component after the reparametrization.
inline constexpr int kCurveMaxDegree = 12;

// The pairing vector at (r, s): taking the inner product with it computes
// the top-weight coordinate of Ad(u_{r,s}) w in the reference coordinates.
inline Vec9 pre_curve(const Form& f, double r, double s) {
  const auto& comps = detail::pre_curve_monomials(f.tag);
  Vec9 out;
  for (int i = 0; i < 9; ++i) {
    double v = 0.0;
    for (const auto& m : comps[static_cast<std::size_t>(i)])
      v += m.c * std::pow(r, m.a) * std::pow(s, m.b);
    out(i) = v;
  }
  return out;
}

// Coefficient arrays (in x, one row per component) of the reparametrized
// curve gamma_y(x) = pre_curve(x, y + x^3).  The shear (x, y) |-> (x, y+x^3)
// has Jacobian 1 and renders the curve non-degenerate for almost every y.
inline Eigen::Matrix<double, 9, kCurveMaxDegree + 1> gamma_coefficients(
    const Form& f, double y) {
  if (!(std::abs(y) <= 2.0))
    throw nondeg_error("gamma_coefficients: |y| must be <= 2");
  Eigen::Matrix<double, 9, kCurveMaxDegree + 1> c;
  c.setZero();
  const auto& comps = detail::pre_curve_monomials(f.tag);
  for (int i = 0; i < 9; ++i)
    for (const auto& m : comps[static_cast<std::size_t>(i)])
      for (int k = 0; k <= m.b; ++k) {
        // r^a s^b with r = x, s = y + x^3:
        // contributes C(b,k) y^{b-k} x^{a+3k}.
        int deg = m.a + 3 * k;
        c(i, deg) += m.c * detail::binom(m.b, k) *
                     std::pow(y, m.b - k);
      }
  return c;
}

// The reparametrized curve point gamma_y(x).
inline Vec9 gamma_curve(const Form& f, double x, double y) {
  if (!(std::abs(x) <= 2.0 && std::abs(y) <= 2.0))
    throw nondeg_error("gamma_curve: |x|, |y| must be <= 2");
  auto c = gamma_coefficients(f, y);
  Vec9 out = Vec9::Zero();
  double xp = 1.0;
  for (int d = 0; d <= kCurveMaxDegree; ++d) {
    out += xp * c.col(d);
    xp *= x;
  }
  return out;
}

// Jet matrix: row k holds the k-th derivative gamma_y^(k)(x), k = 0..8,
// obtained by formal differentiation of the coefficient arrays.
inline Mat9 gamma_jets(const Form& f, double x, double y) {
  if (!(std::abs(x) <= 2.0 && std::abs(y) <= 2.0))
    throw nondeg_error("gamma_jets: |x|, |y| must be <= 2");
  auto c = gamma_coefficients(f, y);
  Mat9 jets = Mat9::Zero();
  for (int k = 0; k < 9; ++k) {
    // Coefficient of x^{d-k} in the k-th derivative: c_d * d!/(d-k)!.
    double xp = 1.0;
    for (int d = k; d <= kCurveMaxDegree; ++d) {
      double fall = 1.0;
      for (int t = 0; t < k; ++t) fall *= d - t;
      jets.row(k) += fall * xp * c.col(d).transpose();
      xp *= x;
    }
  }
  return jets;
}

// |det| of the 9 x 9 jet matrix: the non-degeneracy of the curve at x.
inline double wronskian(const Form& f, double x, double y) {
  return std::abs(gamma_jets(f, x, y).determinant());
}

// ---------------------------------------------------------------------------
// Sublevel-measure (Remez-type) scan.

struct RemezTable {
  std::vector<double> eps;
  std::vector<double> measure;  // fraction of the box with |f| < eps
  double fitted_exponent = 0.0;  // least-squares slope of log measure/log eps
  double sup_abs = 0.0;
  std::int64_t samples = 0;
};

// Estimate Leb{|f| < eps}/Leb(box) for each eps.  Dimensions 1 and 2 use a
// deterministic midpoint grid; higher dimensions use seeded Monte-Carlo.
inline RemezTable remez_scan(
    const std::function<double(const VecX&)>& f,
    const std::vector<std::array<double, 2>>& box,
    const std::vector<double>& eps_list, std::int64_t n_samples = 1 << 16,
    std::uint64_t seed = 1) {
  if (box.empty()) throw nondeg_error("remez_scan: empty box");
  for (const auto& iv : box)
    if (!(iv[0] < iv[1])) throw nondeg_error("remez_scan: empty interval");
  if (eps_list.empty()) throw nondeg_error("remez_scan: empty eps list");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0.0))
      throw nondeg_error("remez_scan: eps must be positive");
    if (i > 0 && !(eps_list[i] < eps_list[i - 1]))
      throw nondeg_error("remez_scan: eps must be strictly decreasing");
  }
  int dim = static_cast<int>(box.size());

  RemezTable out;
  out.eps = eps_list;
  out.measure.assign(eps_list.size(), 0.0);

  auto tally = [&](const VecX& x) {
    double v = std::abs(f(x));
    out.sup_abs = std::max(out.sup_abs, v);
    for (std::size_t i = 0; i < eps_list.size(); ++i)
      if (v < eps_list[i]) out.measure[i] += 1.0;
    ++out.samples;
  };

  if (dim <= 2) {
    // Midpoint grid with roughly n_samples points in total.
    int per = static_cast<int>(std::ceil(
        std::pow(static_cast<double>(n_samples), 1.0 / dim)));
    VecX x(dim);
    if (dim == 1) {
      for (int i = 0; i < per; ++i) {
        x(0) = box[0][0] + (box[0][1] - box[0][0]) * (i + 0.5) / per;
        tally(x);
      }
    } else {
      for (int i = 0; i < per; ++i)
        for (int j = 0; j < per; ++j) {
          x(0) = box[0][0] + (box[0][1] - box[0][0]) * (i + 0.5) / per;
          x(1) = box[1][0] + (box[1][1] - box[1][0]) * (j + 0.5) / per;
          tally(x);
        }
    }
  } else {
    Rng rng(seed);
    VecX x(dim);
    for (std::int64_t k = 0; k < n_samples; ++k) {
      for (int d = 0; d < dim; ++d) x(d) = rng.uniform(box[static_cast<std::size_t>(d)][0], box[static_cast<std::size_t>(d)][1]);
      tally(x);
    }
  }

  for (auto& m : out.measure) m /= static_cast<double>(out.samples);

  // Fit the power law measure ~ eps^t on the entries with positive measure.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (out.measure[i] <= 0.0) continue;
    double lx = std::log(eps_list[i]);
    double ly = std::log(out.measure[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n >= 2 && sxx * n - sx * sx > 0)
    out.fitted_exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return out;
}

inline nlohmann::json to_json(const RemezTable& t) {
  return nlohmann::json{{"eps", t.eps},
                        {"measure", t.measure},
                        {"fitted_exponent", t.fitted_exponent},
                        {"sup_abs", t.sup_abs},
                        {"samples", t.samples}};
}

// ---------------------------------------------------------------------------
// Grid scan of all eight non-degeneracy quantities.

struct NondegValues {
  double p1 = 0, p2 = 0, r1 = 0, r2 = 0;
  double abs_s1 = 0, abs_s2 = 0, abs_l1 = 0, abs_l2 = 0;
};

namespace detail {

// Kernel direction of a corank-one square matrix through the spectrum: the
// eigenvector of the smallest eigenvalue of m^t m.  Parallel to the
// adjugate column used by the reference constructions.
inline VecX spectral_kernel(const MatX& m) {
  Eigen::SelfAdjointEigenSolver<MatX> es(m.transpose() * m);
  return es.eigenvectors().col(0);
}

}  // namespace detail

// Evaluate the four polynomials and (where the pair is non-degenerate at
// threshold tau) the magnitudes of the four extreme-weight components.
// Below the threshold the component magnitudes are recorded as 0.  Shares
// each eigendecomposition between the polynomial and its kernel vector;
// the kernel directions agree with v1/v2/w1/w2 up to sign.
inline NondegValues nondeg_values(const Form& f, const UPair& p,
                                  double tau = kDefaultRankTau) {
  NondegValues v;
  {
    MatX t = t_matrix(f, p, 1, false);
    v.p1 = std::max((t * t.transpose()).determinant(), 0.0);
  }
  {
    MatX t = t_matrix(f, p, 0, false);
    v.p2 = std::max((t.transpose() * t).determinant(), 0.0);
  }
  {
    MatX t = t_matrix(f, p, 1, true);
    Eigen::SelfAdjointEigenSolver<MatX> es(t.transpose() * t);
    VecX ev = es.eigenvalues().cwiseMax(0.0);
    v.r1 = detail::elementary_symmetric(ev, 8);
    if (v.r1 >= tau) v.abs_s1 = std::abs(es.eigenvectors().col(0)(0));
  }
  {
    Mat9 m = stacked_lower_flags(f, p);
    Eigen::SelfAdjointEigenSolver<MatX> es(MatX(m * m.transpose()));
    VecX ev = es.eigenvalues().cwiseMax(0.0);
    v.r2 = detail::elementary_symmetric(ev, 8);
    if (v.r2 >= tau) v.abs_l1 = std::abs(es.eigenvectors().col(0)(8));
  }
  if (v.p1 * v.r1 >= tau) {
    VecX k = detail::spectral_kernel(intersection_map(f, p));
    Vec9 sum = ad_ut(f, p.r1, p.s1) * detail::embed_top(k.head(3)) +
               ad_ut(f, p.r2, p.s2) * detail::embed_top(k.tail(3));
    double n = sum.norm();
    if (n > 0.0) v.abs_s2 = std::abs(sum(8)) / n;
  }
  if (v.p2 * v.r2 >= tau) {
    VecX k = detail::spectral_kernel(intersection_map_lower(f, p));
    Vec9 sum = ad_u(f, -p.r1, -p.s1) * detail::embed_bottom(k.head(3)) +
               ad_u(f, -p.r2, -p.s2) * detail::embed_bottom(k.tail(3));
    double n = sum.norm();
    if (n > 0.0) v.abs_l2 = std::abs(sum(0)) / n;
  }
  return v;
}

struct NondegScan {
  FormTag form = FormTag::Sig22;
  double lo = -1.0, hi = 1.0;
  double step = 1.0 / 16.0;
  int per_axis = 0;  // grid points per axis
  double tau = kDefaultRankTau;
  std::vector<NondegValues> values;  // row-major over (r1, s1, r2, s2)
  NondegValues sup, inf;

  // The pair at a flat grid index.
  UPair pair_at(std::size_t idx) const {
    auto n = static_cast<std::size_t>(per_axis);
    std::array<double, 4> c{};
    for (int d = 3; d >= 0; --d) {
      c[static_cast<std::size_t>(d)] =
          lo + step * static_cast<double>(idx % n);
      idx /= n;
    }
    return UPair{c[0], c[1], c[2], c[3]};
  }

  // Fraction of grid points where the selected quantity is below eps.
  double sublevel_fraction(double NondegValues::*field, double eps) const {
    std::size_t cnt = 0;
    for (const auto& v : values)
      if (v.*field < eps) ++cnt;
    return static_cast<double>(cnt) / static_cast<double>(values.size());
  }
};

// Scan the grid {lo, lo+step, ..., hi}^4.  (hi - lo)/step must be an
// integer.  Parallel over grid chunks; n_threads = 0 uses the hardware
// concurrency.
inline NondegScan nondeg_scan(const Form& f, double step, double lo = -1.0,
                              double hi = 1.0,
                              double tau = kDefaultRankTau,
                              int n_threads = 0) {
  if (!(step > 0.0) || !(hi > lo))
    throw nondeg_error("nondeg_scan: invalid grid");
  double n_exact = (hi - lo) / step;
  auto per_axis = static_cast<int>(std::lround(n_exact)) + 1;
  if (std::abs(n_exact - std::round(n_exact)) > 1e-9)
    throw nondeg_error("nondeg_scan: (hi - lo)/step must be an integer");

  NondegScan scan;
  scan.form = f.tag;
  scan.lo = lo;
  scan.hi = hi;
  scan.step = step;
  scan.per_axis = per_axis;
  scan.tau = tau;
  std::size_t total = 1;
  for (int d = 0; d < 4; ++d) total *= static_cast<std::size_t>(per_axis);
  scan.values.resize(total);

  if (n_threads <= 0)
    n_threads = std::max(1u, std::thread::hardware_concurrency());
  auto worker = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
      scan.values[i] = nondeg_values(f, scan.pair_at(i), tau);
  };
  std::vector<std::thread> pool;
  std::size_t chunk = (total + static_cast<std::size_t>(n_threads) - 1) /
                      static_cast<std::size_t>(n_threads);
  for (int t = 0; t < n_threads; ++t) {
    std::size_t b = static_cast<std::size_t>(t) * chunk;
    if (b >= total) break;
    pool.emplace_back(worker, b, std::min(b + chunk, total));
  }
  for (auto& th : pool) th.join();

  auto acc = [](NondegValues& dst, const NondegValues& src, bool max) {
    auto pick = [max](double a, double b) { return max ? std::max(a, b) : std::min(a, b); };
    dst.p1 = pick(dst.p1, src.p1);
    dst.p2 = pick(dst.p2, src.p2);
    dst.r1 = pick(dst.r1, src.r1);
    dst.r2 = pick(dst.r2, src.r2);
    dst.abs_s1 = pick(dst.abs_s1, src.abs_s1);
    dst.abs_s2 = pick(dst.abs_s2, src.abs_s2);
    dst.abs_l1 = pick(dst.abs_l1, src.abs_l1);
    dst.abs_l2 = pick(dst.abs_l2, src.abs_l2);
  };
  scan.sup = scan.values.front();
  scan.inf = scan.values.front();
  for (const auto& v : scan.values) {
    acc(scan.sup, v, true);
    acc(scan.inf, v, false);
  }
  return scan;
}

inline void save_scan_csv(const NondegScan& scan, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw nondeg_error("save_scan_csv: cannot open " + path);
  out << "u1_r,u1_s,u2_r,u2_s,p1,p2,r1,r2,abs_s1,abs_s2,abs_l1,abs_l2\n";
  char buf[64];
  auto put = [&](double v, char sep) {
    std::snprintf(buf, sizeof buf, "%.17g%c", v, sep);
    out << buf;
  };
  for (std::size_t i = 0; i < scan.values.size(); ++i) {
    UPair p = scan.pair_at(i);
    const NondegValues& v = scan.values[i];
    put(p.r1, ','); put(p.s1, ','); put(p.r2, ','); put(p.s2, ',');
    put(v.p1, ','); put(v.p2, ','); put(v.r1, ','); put(v.r2, ',');
    put(v.abs_s1, ','); put(v.abs_s2, ','); put(v.abs_l1, ',');
    put(v.abs_l2, '\n');
  }
}

inline nlohmann::json to_json(const NondegValues& v) {
  return nlohmann::json{{"p1", v.p1},         {"p2", v.p2},
                        {"r1", v.r1},         {"r2", v.r2},
                        {"abs_s1", v.abs_s1}, {"abs_s2", v.abs_s2},
                        {"abs_l1", v.abs_l1}, {"abs_l2", v.abs_l2}};
}

inline nlohmann::json to_json(const NondegScan& scan) {
  std::vector<double> eps = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  nlohmann::json sub;
  sub["eps"] = eps;
  auto frac = [&](double NondegValues::*field) {
    std::vector<double> out;
    for (double e : eps) out.push_back(scan.sublevel_fraction(field, e));
    return out;
  };
  sub["p1"] = frac(&NondegValues::p1);
  sub["p2"] = frac(&NondegValues::p2);
  sub["r1"] = frac(&NondegValues::r1);
  sub["r2"] = frac(&NondegValues::r2);
  return nlohmann::json{{"form", scan.form == FormTag::Sig22 ? "sig22"
                                                             : "sig31"},
                        {"lo", scan.lo},
                        {"hi", scan.hi},
                        {"step", scan.step},
                        {"per_axis", scan.per_axis},
                        {"n_points", scan.values.size()},
                        {"tau", scan.tau},
                        {"sup", to_json(scan.sup)},
                        {"inf", to_json(scan.inf)},
                        {"sublevel", sub}};
}

// ---------------------------------------------------------------------------
// Obstruction subspaces (split form only).

struct ObstructionWitness {
  std::vector<Vec9> w_inv;   // 3-dim invariant subspace with deficient
                             // top-flag projection
  std::vector<Vec9> w_meet;  // 6-dim subspace meeting every translated
                             // top flag
};

// The invariant subspace is the upper-right block family (coordinate slots
// 4, 7, 8); the meeting subspace is the full off-diagonal block family
// (slots 0, 2, 4, 5, 7, 8).  Both are specific to the split form.
inline ObstructionWitness obstruction_witness(const Form& f) {
  if (f.tag != FormTag::Sig22)
    throw nondeg_error(
        "obstruction_witness: no explicit witness for the (3,1) form");
  ObstructionWitness out;
  for (int i : {4, 7, 8}) out.w_inv.push_back(Vec9::Unit(i));
  for (int i : {0, 2, 4, 5, 7, 8}) out.w_meet.push_back(Vec9::Unit(i));
  return out;
}

// The explicit element of u_{r,s}^t.r^(1) cap W_meet: both off-diagonal
// 2x2 blocks equal the conjugated raising block, the lower one scaled
// by s^2.
inline Vec9 meet_witness_vector(const Form& f, double r, double s) {
  if (f.tag != FormTag::Sig22)
    throw nondeg_error(
        "meet_witness_vector: no explicit witness for the (3,1) form");
  Mat4 x = Mat4::Zero();
  // Upper-right block: [[1, r], [0, 1]]^t [[0,1],[0,0]] [[1, -r],[0, 1]]^t.
  x(0, 2) = -r;
  x(0, 3) = 1.0;
  x(1, 2) = -r * r;
  x(1, 3) = r;
  // Lower-left block: s^2 times the same 2x2 block.
  x(2, 0) = s * s * x(0, 2);
  x(2, 1) = s * s * x(0, 3);
  x(3, 0) = s * s * x(1, 2);
  x(3, 1) = s * s * x(1, 3);
  return WeightBasis::get(f.tag).to_coords(x);
}

}  // namespace r9
