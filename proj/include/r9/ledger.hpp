// Bootstrap constant ledger: derives the full numeric constant system of
// the dimension-improvement induction (theta, p_fin, epsilon, alpha_j,
// N_j, d, beta, eta, ell, delta_0, delta_fin) and certifies the
// inequality chains connecting them.
//
// Two arithmetic layers:
//  * exact rationals / big integers for quantities where exactness is
//    cheap and meaningful (theta, p_fin, the alpha progression, and the
//    reduced delta-chain coefficient);
//  * certified log-space enclosures for everything astronomically large
//    or small.  A positive quantity x is carried as an outward-rounded
//    double interval for ln|x| plus a sign, so e.g. ln(beta) ~ -e^{-3e8}
//    is representable without any floating-point underflow.
// Every reported pass/fail has a certified sign: an inequality is only
// declared to hold when the enclosures separate.
#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace r9 {

struct ledger_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Raised when an enclosure is too wide to certify the quantity it is
// supposed to pin down (the cure is higher working precision).
struct precision_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

namespace ledger_detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------
// Outward-rounded double intervals (used for natural logs of magnitudes).
// ---------------------------------------------------------------------
struct Interval {
  double lo;
  double hi;
};

inline double round_dn(double x) {
  return std::isfinite(x) ? std::nextafter(x, -kInf) : x;
}
inline double round_up(double x) {
  return std::isfinite(x) ? std::nextafter(x, kInf) : x;
}

// Interval around a computed double with a small relative (and absolute)
// safety margin covering the accumulated rounding error of the libm
// calls used to produce it.
inline Interval around(double x, double rel = 4e-15) {
  if (!std::isfinite(x))
    throw precision_error("ledger: non-finite enclosure");
  double e = std::abs(x) * rel + 1e-300;
  return {x - e, x + e};
}

inline Interval iv_exact(double x) { return {x, x}; }

inline Interval iv_add(Interval a, Interval b) {
  return {round_dn(a.lo + b.lo), round_up(a.hi + b.hi)};
}
inline Interval iv_sub(Interval a, Interval b) {
  return {round_dn(a.lo - b.hi), round_up(a.hi - b.lo)};
}
inline Interval iv_neg(Interval a) { return {-a.hi, -a.lo}; }
inline Interval iv_mul(Interval a, Interval b) {
  double p[4] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
  double lo = *std::min_element(p, p + 4);
  double hi = *std::max_element(p, p + 4);
  return {round_dn(lo), round_up(hi)};
}

// Natural log of a positive big integer, accurate to ~1e-15 relative.
inline double log_big(const BigInt& n) {
  if (n <= 0) throw ledger_error("ledger: log of non-positive integer");
  double d = n.convert_to<double>();
  if (std::isfinite(d) && d > 0.0) return std::log(d);
  const auto k = boost::multiprecision::msb(n);
  BigInt top = n >> (k - 52);
  return std::log(top.convert_to<double>()) +
         static_cast<double>(k - 52) * std::log(2.0);
}

inline Interval log_iv_of_rational(const Rational& r) {
  if (r <= 0) throw ledger_error("ledger: log of non-positive rational");
  double v = log_big(boost::multiprecision::numerator(r)) -
             log_big(boost::multiprecision::denominator(r));
  return around(v, 4e-14);
}

// ln(e^x + e^y) and ln(e^x - e^y) (the latter requires x > y); the -inf
// argument is the additive identity.
inline double log_add_pt(double x, double y) {
  if (x < y) std::swap(x, y);
  if (x == -kInf) return -kInf;
  double d = y - x;
  if (d < -745.0) return x;
  return x + std::log1p(std::exp(d));
}
inline double log_sub_pt(double x, double y) {
  if (y == -kInf) return x;
  if (y >= x) return -kInf;  // caller guarantees separation of enclosures
  double d = y - x;
  if (d < -745.0) return x;
  return x + std::log1p(-std::exp(d));
}

}  // namespace ledger_detail

// ---------------------------------------------------------------------
// XNum: sign plus certified enclosure of ln|x|.  sign == 0 with an
// empty magnitude (hi == -inf) is exact zero; sign == 0 with hi > -inf
// records a sign-uncertain residual |x| <= e^{hi} (only ever produced as
// a final slack, never consumed as an operand).
// ---------------------------------------------------------------------
struct XNum {
  int sign = 0;
  ledger_detail::Interval mag{-ledger_detail::kInf, -ledger_detail::kInf};
};

inline XNum xn_zero() { return {}; }

inline XNum xn_from_log(ledger_detail::Interval ln_abs, int sign = 1) {
  if (sign == 0) return {};
  return {sign > 0 ? 1 : -1, ln_abs};
}

inline XNum xn_from_double(double v) {
  if (v == 0.0) return {};
  if (!std::isfinite(v)) throw ledger_error("ledger: non-finite input");
  return {v > 0.0 ? 1 : -1, ledger_detail::around(std::log(std::abs(v)))};
}

inline XNum xn_from_rational(const Rational& r) {
  if (r == 0) return {};
  Rational a = r < 0 ? Rational(-r) : r;
  return {r > 0 ? 1 : -1, ledger_detail::log_iv_of_rational(a)};
}

inline bool xn_is_zero(const XNum& x) {
  return x.sign == 0 && x.mag.hi == -ledger_detail::kInf;
}

// Strictly positive / strictly negative with certainty: the enclosure
// must exclude zero.
inline bool certified_positive(const XNum& x) {
  return x.sign > 0 && x.mag.lo > -ledger_detail::kInf;
}
inline bool certified_negative(const XNum& x) {
  return x.sign < 0 && x.mag.lo > -ledger_detail::kInf;
}
// Nonnegative with certainty (allows enclosures touching zero from above).
inline bool certified_nonneg(const XNum& x) {
  return x.sign >= 0 || x.mag.hi == -ledger_detail::kInf;
}

inline XNum xn_neg(const XNum& x) { return {-x.sign, x.mag}; }

inline XNum xn_mul(const XNum& a, const XNum& b) {
  if (a.sign == 0 || b.sign == 0) {
    if (xn_is_zero(a) || xn_is_zero(b)) return {};
    // uncertain times anything: |result| <= e^{a.hi + b.hi}
    return {0, {-ledger_detail::kInf,
                ledger_detail::round_up(a.mag.hi + b.mag.hi)}};
  }
  return {a.sign * b.sign, ledger_detail::iv_add(a.mag, b.mag)};
}

inline XNum xn_div(const XNum& a, const XNum& b) {
  if (b.sign == 0) throw ledger_error("ledger: division by zero enclosure");
  if (a.sign == 0) {
    if (xn_is_zero(a)) return {};
    return {0, {-ledger_detail::kInf,
                ledger_detail::round_up(a.mag.hi - b.mag.lo)}};
  }
  return {a.sign * b.sign, ledger_detail::iv_sub(a.mag, b.mag)};
}

inline XNum xn_add(const XNum& a, const XNum& b) {
  using namespace ledger_detail;
  if (xn_is_zero(a)) return b;
  if (xn_is_zero(b)) return a;
  if (a.sign == 0 || b.sign == 0) {
    // uncertain operand: widen to a sign-uncertain bound
    return {0, {-kInf, round_up(log_add_pt(a.mag.hi, b.mag.hi))}};
  }
  if (a.sign == b.sign) {
    return {a.sign,
            {round_dn(log_add_pt(a.mag.lo, b.mag.lo)),
             round_up(log_add_pt(a.mag.hi, b.mag.hi))}};
  }
  // Opposite signs: certified cancellation only when the enclosures
  // separate; otherwise the result is a sign-uncertain residual.
  const XNum& big = a.mag.lo > b.mag.hi ? a : b;
  const XNum& sml = a.mag.lo > b.mag.hi ? b : a;
  if (big.mag.lo > sml.mag.hi) {
    return {big.sign,
            {round_dn(log_sub_pt(big.mag.lo, sml.mag.hi)),
             round_up(log_sub_pt(big.mag.hi, sml.mag.lo))}};
  }
  return {0, {-kInf, round_up(log_add_pt(a.mag.hi, b.mag.hi))}};
}

inline XNum xn_sub(const XNum& a, const XNum& b) { return xn_add(a, xn_neg(b)); }

// ln(x) of a certified-positive XNum, as an XNum (the log of a scale
// quantity is itself a signed number whose magnitude may be huge).
inline XNum xn_log_of(const XNum& x) {
  using namespace ledger_detail;
  if (x.sign != 1) throw ledger_error("ledger: log of non-positive value");
  if (x.mag.hi < 0.0)
    return {-1, {round_dn(std::log(-x.mag.hi)), round_up(std::log(-x.mag.lo))}};
  if (x.mag.lo > 0.0)
    return {1, {round_dn(std::log(x.mag.lo)), round_up(std::log(x.mag.hi))}};
  double m = std::max(std::abs(x.mag.lo), std::abs(x.mag.hi));
  return {0, {-kInf, m > 0.0 ? round_up(std::log(m)) : -kInf}};
}

// Certified strict comparison a < b.
inline bool xn_less(const XNum& a, const XNum& b) {
  return certified_positive(xn_sub(b, a));
}

inline double xn_mid_log(const XNum& x) {
  if (x.mag.lo == -ledger_detail::kInf) return x.mag.hi;
  return 0.5 * (x.mag.lo + x.mag.hi);
}

// ---------------------------------------------------------------------
// (mantissa, log) pairs: x = sign * mantissa * 2^{exp2}, mantissa in
// [1, 2).  Round-trips through XNum to well over 30 significant bits.
// ---------------------------------------------------------------------
struct MantissaLog {
  int sign = 0;
  double mantissa = 0.0;  // in [1, 2) unless sign == 0
  double exp2 = 0.0;      // integral, may be astronomically large
};

inline MantissaLog to_mantissa_log(const XNum& x) {
  if (x.sign == 0) return {};
  const double ln2 = std::log(2.0);
  double mid = xn_mid_log(x);
  double e2 = std::floor(mid / ln2);
  double m = std::exp(mid - e2 * ln2);
  if (m >= 2.0) {
    m /= 2.0;
    e2 += 1.0;
  }
  if (m < 1.0) {
    m *= 2.0;
    e2 -= 1.0;
  }
  return {x.sign, m, e2};
}

inline XNum from_mantissa_log(const MantissaLog& ml) {
  if (ml.sign == 0) return {};
  double ln_abs = std::log(ml.mantissa) + ml.exp2 * std::log(2.0);
  return xn_from_log(ledger_detail::around(ln_abs, 4e-15), ml.sign);
}

// ---------------------------------------------------------------------
// Inputs.
// ---------------------------------------------------------------------

// Opaque structural constants of the effective closing lemma; the ledger
// answers "given these, does the numeric chain close?".
struct StructuralConstants {
  double a = 2.0;   // exponent relating R and the base scale delta_0
  double c = 1.0;   // Sobolev-order multiplier in M
  double d = 1.0;   // differentiation-order constant (enters D = d + 2)
  double e1 = 1.0;  // first error exponent
  double e2 = 1.0;  // second error exponent
  double m = 1.0;   // base Sobolev order
};

struct LedgerInput {
  Rational eps0;   // initial dimension, in (0, 1)
  Rational kappa1; // mixing exponent, in (0, 1)
  XNum log_r;      // natural log of R (log-space positive real, R >= 1)
  StructuralConstants sc;
};

// Parse a decimal string ("0.8", "1e-3", "-2.5e+1") to an exact rational.
inline Rational parse_decimal(const std::string& s) {
  if (s.empty()) throw ledger_error("parse_decimal: empty string");
  std::size_t i = 0;
  int sign = 1;
  if (s[i] == '+' || s[i] == '-') sign = s[i++] == '-' ? -1 : 1;
  BigInt mantissa = 0;
  long frac_digits = 0;
  bool seen_digit = false, seen_dot = false;
  for (; i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) ||
                          s[i] == '.'); ++i) {
    if (s[i] == '.') {
      if (seen_dot) throw ledger_error("parse_decimal: repeated '.'");
      seen_dot = true;
    } else {
      mantissa = mantissa * 10 + (s[i] - '0');
      if (seen_dot) ++frac_digits;
      seen_digit = true;
    }
  }
  long exp10 = 0;
  if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
    exp10 = std::stol(s.substr(i + 1));
    i = s.size();
  }
  if (!seen_digit || i != s.size())
    throw ledger_error("parse_decimal: malformed number '" + s + "'");
  Rational r(mantissa * sign);
  long net = exp10 - frac_digits;
  BigInt pow10 = boost::multiprecision::pow(BigInt(10),
                                            static_cast<unsigned>(std::abs(net)));
  if (net >= 0)
    r *= Rational(pow10);
  else
    r /= Rational(pow10);
  return r;
}

inline LedgerInput make_ledger_input(const std::string& eps0,
                                     const std::string& kappa1, double log_r,
                                     StructuralConstants sc = {}) {
  LedgerInput in;
  in.eps0 = parse_decimal(eps0);
  in.kappa1 = parse_decimal(kappa1);
  if (log_r < 0.0) throw ledger_error("ledger: log R must be >= 0");
  in.log_r = xn_from_double(log_r);
  in.sc = sc;
  return in;
}

// ---------------------------------------------------------------------
// Derived constant system.
// ---------------------------------------------------------------------
struct LedgerReport {
  // exact layer
  Rational eps0, kappa1;       // echoed inputs
  Rational theta;              // (min{kappa1, eps0}/80)^2
  BigInt p_fin;                // ceil(6480((9 - eps0)/theta - 1))
  Rational alpha_step;         // theta/6480
  Rational alpha_final;        // alpha_{p_fin}
  bool alpha_final_in_range = false;  // alpha_final in [9 - theta, 9)

  // plain doubles (desk-scale derived inputs)
  double D = 0.0;  // d + 2
  double M = 0.0;  // m + c * D
  StructuralConstants sc;

  // log-space layer (values)
  XNum log_r;   // echoed ln R
  XNum t;       // M * ln R
  XNum theta_x; // theta as an enclosure
  XNum eps;     // 1e-10 (3/4)^{p_fin} theta
  XNum n1;      // ceil(25/(2 eps)), enclosed as [x, x + 1]
  XNum d;       // sum of N_j, enclosed via the geometric envelope
  XNum ell;     // eps * t / (100 M a)

  // log-space layer (logs of scale quantities, stored as signed numbers)
  XNum ln_eps;        // ln eps (same data as eps.mag, kept for the report)
  XNum ln_beta;       // -t / (1e10 M a e1 e2 d^2)
  XNum ln_eta;        // ln(beta)/2
  XNum ln_delta0;     // -ln R / a
  XNum ln_delta_fin;  // (2 eps / theta) * ln delta_0
};

namespace ledger_detail {

inline BigInt ceil_rational(const Rational& r) {
  BigInt num = boost::multiprecision::numerator(r);
  BigInt den = boost::multiprecision::denominator(r);
  if (num >= 0) return (num + den - 1) / den;
  return -((-num) / den);
}

inline void check_tight(const XNum& x, const char* what) {
  if (x.sign == 0) return;
  double width = x.mag.hi - x.mag.lo;
  double scale = std::max(1.0, std::abs(xn_mid_log(x)));
  if (!(width <= 1e-6 * scale))
    throw precision_error(std::string("ledger: enclosure too wide for ") +
                          what);
}

}  // namespace ledger_detail

inline LedgerReport derive_constants(const LedgerInput& in) {
  using namespace ledger_detail;
  if (!(in.eps0 > 0 && in.eps0 < 1))
    throw ledger_error("ledger: eps0 must be in (0, 1)");
  if (!(in.kappa1 > 0 && in.kappa1 < 1))
    throw ledger_error("ledger: kappa1 must be in (0, 1)");
  for (double v : {in.sc.a, in.sc.c, in.sc.d, in.sc.e1, in.sc.e2, in.sc.m})
    if (!(v > 0.0) || !std::isfinite(v))
      throw ledger_error("ledger: structural constants must be positive");
  if (in.log_r.sign < 0) throw ledger_error("ledger: log R must be >= 0");

  LedgerReport rep;
  rep.eps0 = in.eps0;
  rep.kappa1 = in.kappa1;
  rep.sc = in.sc;
  rep.log_r = in.log_r;

  // theta and p_fin, exactly.
  Rational base = std::min(in.kappa1, in.eps0) / 80;
  rep.theta = base * base;
  Rational arg = 6480 * ((Rational(9) - in.eps0) / rep.theta - 1);
  if (arg < 1) throw ledger_error("ledger: degenerate step count");
  rep.p_fin = ceil_rational(arg);

  // alpha progression, exactly.
  rep.alpha_step = rep.theta / 6480;
  rep.alpha_final = in.eps0 + Rational(rep.p_fin) * rep.alpha_step;
  rep.alpha_final_in_range =
      rep.alpha_final >= Rational(9) - rep.theta && rep.alpha_final < 9;

  rep.theta_x = xn_from_rational(rep.theta);

  // eps = 1e-10 (3/4)^{p_fin} theta, assembled in log space.
  Interval ln_theta = log_iv_of_rational(rep.theta);
  Interval p_iv = around(rep.p_fin.convert_to<double>());
  Interval ln34 = around(std::log(0.75));
  Interval ln_eps = iv_add(iv_add(iv_mul(iv_exact(-10.0), around(std::log(10.0))),
                                  iv_mul(p_iv, ln34)),
                           ln_theta);
  rep.eps = xn_from_log(ln_eps);
  rep.ln_eps = xn_log_of(rep.eps);
  check_tight(rep.eps, "eps");

  // N_1 = ceil(25/(2 eps)): certified enclosure [x, x + 1] of the exact
  // ceiling (the argument is certified >= 1 first).
  Interval ln_x = iv_sub(around(std::log(12.5)), ln_eps);
  if (!(ln_x.lo > 0.0))
    throw precision_error("ledger: cannot certify the N_1 ceiling");
  rep.n1 = xn_from_log({ln_x.lo, round_up(log_add_pt(ln_x.hi, 0.0))});
  check_tight(rep.n1, "N_1");

  // d = sum N_j: between 4 N_1 (1 - (3/4)^{p_fin}) and the same plus
  // p_fin (each ceiling adds strictly less than one).
  XNum qp = xn_from_log(iv_mul(p_iv, ln34));
  XNum one_minus_qp = xn_sub(xn_from_double(1.0), qp);
  if (!certified_positive(one_minus_qp))
    throw precision_error("ledger: cannot certify 1 - (3/4)^{p_fin} > 0");
  XNum d0 = xn_mul(xn_from_double(4.0), xn_mul(rep.n1, one_minus_qp));
  XNum resid = xn_from_log({-kInf, round_up(log_big(rep.p_fin))});
  rep.d = xn_add(d0, resid);
  check_tight(rep.d, "d");

  // Sobolev bookkeeping and the time parameter.
  rep.D = in.sc.d + 2.0;
  rep.M = in.sc.m + in.sc.c * rep.D;
  rep.t = xn_mul(xn_from_double(rep.M), in.log_r);

  // ell = eps * t / (100 M a).
  XNum denom = xn_mul(xn_from_double(100.0),
                      xn_mul(xn_from_double(rep.M), xn_from_double(in.sc.a)));
  rep.ell = xn_div(xn_mul(rep.eps, rep.t), denom);

  // ln beta = -t / (1e10 M a e1 e2 d^2); ln eta = ln(beta)/2.
  XNum kbeta = xn_mul(xn_from_double(1e10),
                      xn_mul(xn_from_double(rep.M),
                             xn_mul(xn_from_double(in.sc.a),
                                    xn_mul(xn_from_double(in.sc.e1),
                                           xn_from_double(in.sc.e2)))));
  rep.ln_beta = xn_neg(xn_div(rep.t, xn_mul(kbeta, xn_mul(rep.d, rep.d))));
  rep.ln_eta = xn_mul(rep.ln_beta, xn_from_double(0.5));

  // ln delta_0 = -ln R / a; ln delta_fin = (2 eps/theta) ln delta_0.
  rep.ln_delta0 = xn_neg(xn_div(in.log_r, xn_from_double(in.sc.a)));
  rep.ln_delta_fin = xn_mul(
      xn_div(xn_mul(xn_from_double(2.0), rep.eps), rep.theta_x),
      rep.ln_delta0);
  return rep;
}

// Descriptors for individual steps of the progression (j >= 1).
inline Rational ledger_alpha_j(const LedgerReport& rep, const BigInt& j) {
  return rep.eps0 + Rational(j) * rep.alpha_step;
}

// Enclosure of N_j = ceil(N_1 (3/4)^{j-1}).
inline XNum ledger_n_j(const LedgerReport& rep, const BigInt& j) {
  using namespace ledger_detail;
  if (j < 1 || j > rep.p_fin) throw ledger_error("ledger: j out of range");
  BigInt jm1v = j - 1;
  Interval jm1 = jm1v == 0 ? iv_exact(0.0) : around(jm1v.convert_to<double>());
  Interval shift = iv_mul(jm1, around(std::log(0.75)));
  Interval ln_x = iv_add(rep.n1.mag, shift);
  return xn_from_log({ln_x.lo, round_up(log_add_pt(ln_x.hi, 0.0))});
}

// Enclosure of the partial sum d_j = N_1 + ... + N_j.
inline XNum ledger_d_j(const LedgerReport& rep, const BigInt& j) {
  using namespace ledger_detail;
  if (j < 1 || j > rep.p_fin) throw ledger_error("ledger: j out of range");
  Interval j_iv = around(j.convert_to<double>());
  XNum qj = xn_from_log(iv_mul(j_iv, around(std::log(0.75))));
  XNum one_minus = xn_sub(xn_from_double(1.0), qj);
  if (!certified_positive(one_minus))
    throw precision_error("ledger: cannot certify 1 - (3/4)^j > 0");
  XNum lo_part = xn_mul(xn_from_double(4.0), xn_mul(rep.n1, one_minus));
  XNum resid = xn_from_log({-kInf, round_up(log_big(j))});
  return xn_add(lo_part, resid);
}

// Slack of the telescoping bound 2 d_j ell >= (1/(M a)) (1 - (3/4)^j) t:
// equals twice the accumulated ceiling residuals times ell, a certified
// nonnegative enclosure [0, 2 j ell].
inline XNum ledger_telescoping_slack(const LedgerReport& rep, const BigInt& j) {
  using namespace ledger_detail;
  if (j < 1 || j > rep.p_fin) throw ledger_error("ledger: j out of range");
  if (xn_is_zero(rep.ell)) return xn_zero();
  double hi = round_up(std::log(2.0) + log_big(j) + rep.ell.mag.hi);
  return xn_from_log({-kInf, hi}, 1);
}

// ---------------------------------------------------------------------
// Inequality table.
// ---------------------------------------------------------------------
struct InequalityCheck {
  std::string name;
  bool pass = false;         // certified strict positivity of the slack
  bool r_dependent = false;  // slack scales with ln R
  XNum slack;                // lhs - rhs in exponent (log-scale) units
  std::string note;
};

struct CheckTable {
  std::vector<InequalityCheck> rows;
  bool all_pass = false;
  bool all_satisfiable = false;  // some rows fail for every R
  bool min_log_r_found = false;
  XNum min_log_r;  // minimal ln R at which every satisfiable row passes
};

namespace ledger_detail {

// The R-dependent scale inequalities evaluated on a derived report.
// Slack convention: required inequality is slack > 0; at ln R = 0 all
// scales degenerate to 1 and every slack collapses to a non-positive
// enclosure.
inline std::vector<InequalityCheck> scale_rows(const LedgerReport& rep) {
  std::vector<InequalityCheck> rows;
  XNum ma = xn_mul(xn_from_double(rep.M), xn_from_double(rep.sc.a));

  {  // e^{-eps^2 ell} <= beta^{1e10 e1 e2}  <=>  eps^2 ell >= t/(M a d^2)
    XNum lhs = xn_mul(xn_mul(rep.eps, rep.eps), rep.ell);
    XNum rhs = xn_div(rep.t, xn_mul(ma, xn_mul(rep.d, rep.d)));
    XNum slack = xn_sub(lhs, rhs);
    rows.push_back({"much_smaller_scale", certified_positive(slack), true,
                    slack,
                    "eps^2 ell vs t/(M a d^2); the ratio is independent of "
                    "R, so the row either holds at every R > 1 or none"});
  }
  {  // e^{-theta ell} <= 10^{-10000}  <=>  theta ell >= 10^4 ln 10
    XNum lhs = xn_mul(rep.theta_x, rep.ell);
    XNum rhs = xn_from_log(around(std::log(10000.0 * std::log(10.0))), 1);
    XNum slack = xn_sub(lhs, rhs);
    rows.push_back({"r_large_enough", certified_positive(slack), true, slack,
                    "theta ell vs 10^4 ln 10"});
  }
  {  // delta_{p_fin} <= delta_fin, reduced along the three-step estimate
     // to the exact coefficient 1e12/theta - 200/theta - 2 p_fin - 8 >= 0
     // times ell.
    Rational coeff = Rational(BigInt("1000000000000")) / rep.theta -
                     Rational(200) / rep.theta - 2 * Rational(rep.p_fin) - 8;
    XNum slack = xn_mul(xn_from_rational(coeff), rep.ell);
    rows.push_back({"delta_chain", coeff > 0 && certified_positive(slack),
                    true, slack,
                    "e^{2 d ell} delta_0 vs delta_0^{2 eps/theta} via "
                    "d <= p_fin + 4 N_1, absorption of e^{8 N_1 ell} "
                    "delta_0, and (3/4)^{p_fin}/eps = 1e10/theta"});
  }
  {  // #F_fin >= delta_0^{-4 eps0/3}: reduces to
     // (eps0/6) t/(M a) >= 29 t / (1e10 M a e1 e2 d)
    XNum inner = xn_sub(
        xn_from_rational(rep.eps0 / 6),
        xn_div(xn_from_double(29.0),
               xn_mul(xn_from_double(1e10 * rep.sc.e1 * rep.sc.e2), rep.d)));
    XNum slack = xn_mul(xn_div(rep.t, ma), inner);
    rows.push_back({"sheet_count", certified_positive(slack), true, slack,
                    "beta^{29 d} e^{3 eps0 t/(2 M a)} vs "
                    "delta_0^{-4 eps0/3}"});
  }
  return rows;
}

// Rows that hold by construction of the ceilings; their slack is the
// accumulated ceiling residual, a certified nonnegative enclosure.
inline std::vector<InequalityCheck> construction_rows(const LedgerReport& rep) {
  std::vector<InequalityCheck> rows;
  double lp = log_big(rep.p_fin);
  bool degenerate = xn_is_zero(rep.ell);
  {  // d <= p_fin + 4 N_1 (1 - (3/4)^{p_fin}); slack in [0, 2 p_fin ell]
    XNum slack = degenerate
                     ? xn_zero()
                     : xn_from_log(
                           {-kInf,
                            round_up(std::log(2.0) + lp + rep.ell.mag.hi)},
                           1);
    rows.push_back({"chain_d_bound", true, false, slack,
                    "sum of ceilings vs its geometric envelope"});
  }
  {  // e^{8 N_1 ell} delta_0 <= e^{8 ell}; slack = (8 - 8u) ell, u in [0,1)
    XNum slack = degenerate
                     ? xn_zero()
                     : xn_from_log(
                           {-kInf,
                            round_up(std::log(8.0) + rep.ell.mag.hi)},
                           1);
    rows.push_back({"chain_absorb_n1", true, false, slack,
                    "8 N_1 ell - t/(M a) vs 8 ell, via t/(M a) = "
                    "(100/eps) ell"});
  }
  {  // N_1 >= ceil(required step count); the required count equals
     // 12.5/eps, so the slack is the ceiling residual in [0, 1)
    rows.push_back({"step_count", true, false, xn_from_log({-kInf, 0.0}, 1),
                    "N_1 vs the step count required by the Margulis "
                    "function descent"});
  }
  return rows;
}

inline LedgerInput with_log_r(const LedgerInput& in, const XNum& log_r) {
  LedgerInput out = in;
  out.log_r = log_r;
  return out;
}

}  // namespace ledger_detail

inline CheckTable check_inequalities(const LedgerInput& in,
                                     const LedgerReport& rep) {
  using namespace ledger_detail;
  CheckTable table;
  table.rows = scale_rows(rep);
  auto built = construction_rows(rep);
  table.rows.insert(table.rows.end(), built.begin(), built.end());
  table.all_pass = true;
  for (const auto& r : table.rows) table.all_pass &= r.pass;

  // Satisfiability probe: evaluate the R-dependent rows at an
  // astronomically large ln R (well past every finite threshold).
  double probe = std::max(700.0, std::abs(xn_mid_log(rep.eps)) + 200.0);
  auto rows_at = [&](double logmag_of_ln_r) {
    LedgerReport r = derive_constants(
        with_log_r(in, xn_from_log(around(logmag_of_ln_r), 1)));
    return scale_rows(r);
  };
  auto probe_rows = rows_at(probe);
  std::vector<bool> satisfiable(probe_rows.size());
  table.all_satisfiable = true;
  for (std::size_t i = 0; i < probe_rows.size(); ++i) {
    satisfiable[i] = probe_rows[i].pass;
    table.all_satisfiable &= probe_rows[i].pass;
  }

  // Minimal ln R at which all satisfiable R-dependent rows pass:
  // bisection on the log of ln R (the pass predicate is monotone in R).
  bool any = false;
  for (bool s : satisfiable) any = any || s;
  if (any) {
    auto pass_at = [&](double lm) {
      auto rows = rows_at(lm);
      for (std::size_t i = 0; i < rows.size(); ++i)
        if (satisfiable[i] && !rows[i].pass) return false;
      return true;
    };
    double lo = -745.0, hi = probe;
    if (!pass_at(hi))
      throw precision_error("ledger: satisfiability probe not monotone");
    for (int it = 0; it < 200 && hi - lo > 1e-9 * std::max(1.0, std::abs(hi));
         ++it) {
      double mid = 0.5 * (lo + hi);
      (pass_at(mid) ? hi : lo) = mid;
    }
    table.min_log_r = xn_from_log({lo, hi}, 1);
    table.min_log_r_found = true;
  }
  return table;
}

// ---------------------------------------------------------------------
// JSON serialization.  Log endpoints are emitted as strings so that
// -inf endpoints survive the round trip verbatim.
// ---------------------------------------------------------------------
inline nlohmann::json to_json(const XNum& x) {
  auto fmt = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  return {{"sign", x.sign}, {"ln_abs_lo", fmt(x.mag.lo)},
          {"ln_abs_hi", fmt(x.mag.hi)}};
}

inline nlohmann::json to_json(const LedgerReport& rep) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["eps0"] = rep.eps0.str();
  j["kappa1"] = rep.kappa1.str();
  j["theta"] = rep.theta.str();
  j["p_fin"] = rep.p_fin.str();
  j["alpha_step"] = rep.alpha_step.str();
  j["alpha_final"] = rep.alpha_final.str();
  j["alpha_final_in_range"] = rep.alpha_final_in_range;
  j["D"] = rep.D;
  j["M"] = rep.M;
  j["structural"] = {{"a", rep.sc.a}, {"c", rep.sc.c},  {"d", rep.sc.d},
                     {"e1", rep.sc.e1}, {"e2", rep.sc.e2}, {"m", rep.sc.m}};
  j["log_r"] = to_json(rep.log_r);
  j["t"] = to_json(rep.t);
  j["eps"] = to_json(rep.eps);
  j["n1"] = to_json(rep.n1);
  j["d"] = to_json(rep.d);
  j["ell"] = to_json(rep.ell);
  j["ln_beta"] = to_json(rep.ln_beta);
  j["ln_eta"] = to_json(rep.ln_eta);
  j["ln_delta0"] = to_json(rep.ln_delta0);
  j["ln_delta_fin"] = to_json(rep.ln_delta_fin);
  return j;
}

inline nlohmann::json to_json(const CheckTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : table.rows)
    rows.push_back({{"name", r.name},
                    {"pass", r.pass},
                    {"r_dependent", r.r_dependent},
                    {"slack", to_json(r.slack)},
                    {"note", r.note}});
  return {{"rows", rows},
          {"all_pass", table.all_pass},
          {"all_satisfiable", table.all_satisfiable},
          {"min_log_r_found", table.min_log_r_found},
          {"min_log_r", to_json(table.min_log_r)}};
}

}  // namespace r9
