// 4x4 linear algebra for the symmetric pairs (sl4, so(Q)): the involution
// sigma and its eigenspace split, brackets, the so(2,2) ideal decomposition,
// matrix exponential/logarithm, the one-parameter diagonal and horospherical
// subgroups, and the H x exp(r-part) factorization of group elements near
// the identity.
#pragma once

#include "r9/form.hpp"
#include "r9/linalg.hpp"

#include <array>
#include <stdexcept>
#include <vector>

namespace r9 {

// sigma(x) = -q_tilde x^t q_tilde (q_tilde is its own inverse).  Involutive
// Lie-algebra automorphism; its fixed space h = so(Q) has dimension 6, the
// (-1)-eigenspace has dimension 9.
inline Mat4 sigma(const Form& f, const Mat4& x) {
  return -(f.q_tilde * x.transpose() * f.q_tilde);
}

struct HRSplit {
  Mat4 h;  // sigma-fixed component
  Mat4 r;  // sigma-anti-fixed component
};

inline HRSplit split_h_r(const Form& f, const Mat4& x) {
  Mat4 s = sigma(f, x);
  return HRSplit{0.5 * (x + s), 0.5 * (x - s)};
}

inline Mat4 bracket(const Mat4& x, const Mat4& y) { return x * y - y * x; }

// Generator of the one-parameter diagonal subgroup a_t = diag(e^t,1,1,e^-t).
inline Mat4 diag_generator() {
  Mat4 m = Mat4::Zero();
  m(0, 0) = 1.0;
  m(3, 3) = -1.0;
  return m;
}

inline Mat4 diag_flow(double t) {
  Mat4 m = Mat4::Identity();
  m(0, 0) = std::exp(t);
  m(3, 3) = std::exp(-t);
  return m;
}

// The horospherical elements u_{r,s}.  Both families are abelian with
// additive parameters: u_{r1,s1} u_{r2,s2} = u_{r1+r2, s1+s2}.
inline Mat4 u_elem(const Form& f, double r, double s) {
  Mat4 m = Mat4::Identity();
  if (f.tag == FormTag::Sig22) {
    m(0, 1) = r;
    m(0, 2) = s;
    m(0, 3) = s * r;
    m(1, 3) = s;
    m(2, 3) = r;
  } else {
    m(0, 1) = r;
    m(0, 2) = s;
    m(0, 3) = 0.5 * (r * r + s * s);
    m(1, 3) = r;
    m(2, 3) = s;
  }
  return m;
}

// Nilpotent generator: log of u_{r,s} (strictly upper triangular, cube zero).
inline Mat4 u_generator(const Form& f, double r, double s) {
  Mat4 m = Mat4::Zero();
  if (f.tag == FormTag::Sig22) {
    m(0, 1) = r;
    m(0, 2) = s;
    m(1, 3) = s;
    m(2, 3) = r;
  } else {
    m(0, 1) = r;
    m(0, 2) = s;
    m(1, 3) = r;
    m(2, 3) = s;
  }
  return m;
}

// ---------------------------------------------------------------------------
// Bases of sl4, h and r (generic, trace-orthonormal, deterministic).

// Orthonormal basis of sl4 under <X,Y> = trace(X Y^t): the 12 off-diagonal
// elementary matrices in lexicographic order followed by 3 orthonormalized
// trace-free diagonals.
inline const std::vector<Mat4>& sl4_basis() {
  static const std::vector<Mat4> basis = [] {
    std::vector<Mat4> b;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        if (i != j) b.push_back(elem4(i, j));
    // Trace-free diagonals diag(1,-1,0,0), diag(0,1,-1,0), diag(0,0,1,-1),
    // Gram-Schmidt orthonormalized in this order.
    std::vector<Mat4> diags;
    for (int k = 0; k < 3; ++k) {
      Mat4 d = Mat4::Zero();
      d(k, k) = 1.0;
      d(k + 1, k + 1) = -1.0;
      diags.push_back(d);
    }
    for (auto& d : diags) {
      for (const auto& prev : b) d -= trace_dot(d, prev) * prev;
      d /= trace_norm(d);
      b.push_back(d);
    }
    return b;
  }();
  return basis;
}

namespace detail {

// Project the sl4 basis through `proj`, keep a deterministic orthonormal
// basis of the image (Gram-Schmidt in basis order, tolerance 1e-8).
template <class Proj>
std::vector<Mat4> image_basis(Proj&& proj) {
  std::vector<Mat4> out;
  for (const auto& e : sl4_basis()) {
    Mat4 v = proj(e);
    for (const auto& prev : out) v -= trace_dot(v, prev) * prev;
    double n = trace_norm(v);
    if (n > 1e-8) out.push_back(v / n);
  }
  return out;
}

}  // namespace detail

// Trace-orthonormal basis of the sigma-fixed subalgebra h (6 elements).
inline std::vector<Mat4> h_basis(const Form& f) {
  return detail::image_basis(
      [&](const Mat4& x) { return split_h_r(f, x).h; });
}

// Trace-orthonormal basis of the (-1)-eigenspace (9 elements).  The
// weight-graded basis used everywhere downstream lives in weight_rep.hpp;
// this generic basis only serves the factorization chart below.
inline std::vector<Mat4> r_basis_generic(const Form& f) {
  return detail::image_basis(
      [&](const Mat4& x) { return split_h_r(f, x).r; });
}

// ---------------------------------------------------------------------------
// so(2,2) ideal decomposition: h = h1 (+) h2 with both ideals isomorphic to
// sl2, given by explicit block matrices.  Triples are ordered by the
// coefficients (a,b,c) = (1,0,0), (0,1,0), (0,0,1) of the defining blocks.
struct So22Ideals {
  std::array<Mat4, 3> first;
  std::array<Mat4, 3> second;
};

inline So22Ideals so22_ideals(const Form& f) {
  require_form(f, FormTag::Sig22, "so22_ideals");
  auto block1 = [](double a, double b, double c) {
    // [[a,b,0,0],[c,-a,0,0],[0,0,a,b],[0,0,c,-a]]
    Mat4 m = Mat4::Zero();
    m(0, 0) = a;  m(0, 1) = b;
    m(1, 0) = c;  m(1, 1) = -a;
    m(2, 2) = a;  m(2, 3) = b;
    m(3, 2) = c;  m(3, 3) = -a;
    return m;
  };
  auto block2 = [](double a, double b, double c) {
    // [[a,0,b,0],[0,a,0,b],[c,0,-a,0],[0,c,0,-a]]
    Mat4 m = Mat4::Zero();
    m(0, 0) = a;  m(0, 2) = b;
    m(1, 1) = a;  m(1, 3) = b;
    m(2, 0) = c;  m(2, 2) = -a;
    m(3, 1) = c;  m(3, 3) = -a;
    return m;
  };
  So22Ideals out;
  out.first = {block1(1, 0, 0), block1(0, 1, 0), block1(0, 0, 1)};
  out.second = {block2(1, 0, 0), block2(0, 1, 0), block2(0, 0, 1)};
  return out;
}

// ---------------------------------------------------------------------------
// Matrix exponential / logarithm.

// Exponential by Pade order 6 with scaling and squaring; terminating series
// fast path for nilpotent inputs (x^4 = 0).
inline Mat4 mat_exp(const Mat4& x) {
  Mat4 x2 = x * x;
  Mat4 x4 = x2 * x2;
  if (sup_norm(x4) == 0.0) {
    Mat4 x3 = x2 * x;
    return Mat4::Identity() + x + 0.5 * x2 + (1.0 / 6.0) * x3;
  }
  int squarings = 0;
  double norm = x.cwiseAbs().rowwise().sum().maxCoeff();  // inf operator norm
  Mat4 a = x;
  if (norm > 0.5) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    a *= std::pow(0.5, squarings);
  }
  // Pade(6,6): p(a) = sum c_k a^k, exp(a) ~ p(a) / p(-a).
  static const double c[7] = {1.0,        1.0 / 2.0,   5.0 / 44.0,
                              1.0 / 66.0, 1.0 / 792.0, 1.0 / 15840.0,
                              1.0 / 665280.0};
  Mat4 a2 = a * a;
  Mat4 u = c[1] * Mat4::Identity() + c[3] * a2 + c[5] * a2 * a2;
  u = a * u;
  Mat4 v = c[0] * Mat4::Identity() + c[2] * a2 + c[4] * a2 * a2 +
           c[6] * a2 * a2 * a2;
  Mat4 num = v + u;
  Mat4 den = v - u;
  Mat4 e = den.partialPivLu().solve(num);
  for (int i = 0; i < squarings; ++i) e = e * e;
  return e;
}

struct log_domain_error : std::domain_error {
  using std::domain_error::domain_error;
};

// Logarithm of a group element near the identity: inverse scaling (repeated
// principal square roots via the Denman-Beavers iteration) followed by the
// Mercator series.  Requires ||g - Id|| < 0.5 in the 2-operator norm.
inline Mat4 mat_log(const Mat4& g) {
  Mat4 d = g - Mat4::Identity();
  if (d.jacobiSvd().singularValues()(0) >= 0.5)
    throw log_domain_error("mat_log: input outside convergence ball");
  Mat4 a = g;
  int halvings = 0;
  while (sup_norm(Mat4(a - Mat4::Identity())) > 0.125 && halvings < 40) {
    // Denman-Beavers iteration for the principal square root.
    Mat4 y = a, z = Mat4::Identity();
    for (int it = 0; it < 60; ++it) {
      Mat4 yn = 0.5 * (y + z.inverse());
      Mat4 zn = 0.5 * (z + y.inverse());
      double change = sup_norm(Mat4(yn - y));
      y = yn;
      z = zn;
      if (change < 1e-16) break;
    }
    a = y;
    ++halvings;
  }
  Mat4 m = a - Mat4::Identity();
  Mat4 term = m;
  Mat4 sum = Mat4::Zero();
  for (int k = 1; k <= 80; ++k) {
    sum += (k % 2 == 1 ? 1.0 : -1.0) / k * term;
    term = term * m;
    if (sup_norm(term) < 1e-300) break;
  }
  return std::ldexp(1.0, halvings) * sum;
}

// ---------------------------------------------------------------------------
// Factorization g = h * exp(w) with h in the symmetric subgroup H and w in
// the (-1)-eigenspace, solved by damped Newton iteration on the coordinates
// (log(h) in h, w in r).

struct BCHFactorization {
  Mat4 h;       // group element with sigma-fixed logarithm
  Mat4 w;       // Lie-algebra element with sigma(w) = -w
  int iterations = 0;
};

struct no_factorization_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline BCHFactorization bch_factorize(const Form& f, const Mat4& g,
                                      double eta0 = 0.05) {
  if (sup_norm(Mat4(g - Mat4::Identity())) > eta0 + 1e-12)
    throw no_factorization_error("bch_factorize: input too far from identity");
  const auto hb = h_basis(f);
  const auto rb = r_basis_generic(f);
  const int nh = static_cast<int>(hb.size());  // 6
  const int nr = static_cast<int>(rb.size());  // 9
  const int n = nh + nr;

  auto assemble = [&](const VecX& theta, Mat4& xh, Mat4& xw) {
    xh = Mat4::Zero();
    xw = Mat4::Zero();
    for (int i = 0; i < nh; ++i) xh += theta(i) * hb[i];
    for (int i = 0; i < nr; ++i) xw += theta(nh + i) * rb[i];
  };
  Mat4 ginv = g.inverse();
  auto residual = [&](const VecX& theta) {
    Mat4 xh, xw;
    assemble(theta, xh, xw);
    Mat4 l = mat_log(mat_exp(xh) * mat_exp(xw) * ginv);
    VecX res(n);
    for (int i = 0; i < nh; ++i) res(i) = trace_dot(l, hb[i]);
    for (int i = 0; i < nr; ++i) res(nh + i) = trace_dot(l, rb[i]);
    return res;
  };

  // Initial guess: the eigenspace split of log(g).
  Mat4 lg = mat_log(g);
  HRSplit sp = split_h_r(f, lg);
  VecX theta(n);
  for (int i = 0; i < nh; ++i) theta(i) = trace_dot(sp.h, hb[i]);
  for (int i = 0; i < nr; ++i) theta(nh + i) = trace_dot(sp.r, rb[i]);

  VecX res = residual(theta);
  double rn = res.norm();
  int iter = 0;
  const double fd = 1e-7;
  while (rn > 1e-13 && iter < 100) {
    MatX jac(n, n);
    for (int j = 0; j < n; ++j) {
      VecX tp = theta;
      tp(j) += fd;
      jac.col(j) = (residual(tp) - res) / fd;
    }
    VecX step = jac.partialPivLu().solve(res);
    double damping = 1.0;
    VecX theta_new;
    VecX res_new;
    double rn_new = rn;
    for (int k = 0; k < 25; ++k) {
      theta_new = theta - damping * step;
      res_new = residual(theta_new);
      rn_new = res_new.norm();
      if (rn_new < rn) break;
      damping *= 0.5;
    }
    if (rn_new >= rn) break;  // stalled
    theta = theta_new;
    res = res_new;
    rn = rn_new;
    ++iter;
  }
  if (rn > 1e-9)
    throw no_factorization_error(
        "bch_factorize: Newton did not converge (input outside chart)");

  Mat4 xh, xw;
  assemble(theta, xh, xw);
  return BCHFactorization{mat_exp(xh), xw, iter};
}

}  // namespace r9
