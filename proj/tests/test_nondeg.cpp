#include <catch2/catch_amalgamated.hpp>

#include "r9/nondeg.hpp"
#include "r9/rng.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <vector>

using namespace r9;

namespace {

// Frozen regression baselines, measured from the deterministic step-1/16
// grid scan and the 33x33 Wronskian grid on this reference build.
constexpr double kFrozenSupP1 = 65536.0;
constexpr double kFrozenSupR1 = 17280.0;
constexpr double kFrozenSupS1 = 0.99610894942641137;
constexpr double kFrozenSupS2 = 0.99902486568726645;
constexpr double kFrozenWronskianMin = 158018273280000.0;

const Form& sig22() {
  static const Form f = Form::from_tag(FormTag::Sig22);
  return f;
}
const Form& sig31() {
  static const Form f = Form::from_tag(FormTag::Sig31);
  return f;
}

int numeric_rank(const MatX& m, double tol = 1e-8) {
  Eigen::JacobiSVD<MatX> svd(m);
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > tol * svd.singularValues()(0)) ++rank;
  return rank;
}

UPair random_pair(Rng& rng) {
  return UPair{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
               rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
}

// A random pair bounded away from the degeneracy loci: all four
// polynomials (hence all kernel-vector preconditions) are comfortably
// above the default threshold.
UPair generic_pair(const Form& f, Rng& rng) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    UPair p = random_pair(rng);
    if (r1(f, p) >= 1e-4 && r2(f, p) >= 1e-4 &&
        p1(f, p) * r1(f, p) >= 1e-4 && p2(f, p) * r2(f, p) >= 1e-4)
      return p;
  }
  throw std::runtime_error("generic_pair: rejection sampling failed");
}

// Orthonormal basis of u^t.r^(1) as columns.
MatX top_flag_image(const Form& f, double r, double s) {
  MatX cols = ad_ut(f, r, s).block(0, 6, 9, 3);
  auto onb = orthonormal_columns(cols);
  MatX out(9, static_cast<int>(onb.size()));
  for (std::size_t i = 0; i < onb.size(); ++i)
    out.col(static_cast<int>(i)) = onb[i];
  return out;
}

double pair_angle(const Form& f, const UPair& p) {
  auto b1 = orthonormal_columns(ad_ut(f, p.r1, p.s1).block(0, 6, 9, 3));
  auto b2 = orthonormal_columns(ad_ut(f, p.r2, p.s2).block(0, 6, 9, 3));
  return subspace_angle({b1, b2});
}

// Unit vector in the intersection of the column spans of a and b, computed
// from the SVD kernel of [a | -b].
Vec9 intersection_oracle(const MatX& a, const MatX& b) {
  MatX stacked(9, a.cols() + b.cols());
  stacked << a, -b;
  Eigen::JacobiSVD<MatX> svd(stacked, Eigen::ComputeFullV);
  VecX k = svd.matrixV().col(stacked.cols() - 1);
  Vec9 v = a * k.head(a.cols());
  return v / v.norm();
}

}  // namespace

TEST_CASE("stacked projection matrices have the expected ranks") {
  Rng rng(31);
  for (const Form& f : {sig22(), sig31()}) {
    // Identity pair with the identity block: three equal blocks, rank 3.
    MatX t_id = t_matrix(f, UPair{}, 1, true);
    REQUIRE(t_id.rows() == 9);
    CHECK(numeric_rank(t_id) == 3);
    CHECK((t_id.block(0, 0, 3, 9) - t_id.block(3, 0, 3, 9)).norm() < 1e-12);

    for (int trial = 0; trial < 10; ++trial) {
      UPair p = random_pair(rng);
      // Generic pairs: two translated top flags span 6 dimensions, three
      // span only 8 (never 9), and two translated upper flags span all 9.
      CHECK(numeric_rank(t_matrix(f, p, 1, false)) == 6);
      MatX t9 = t_matrix(f, p, 1, true);
      CHECK(numeric_rank(t9) == 8);
      CHECK(std::abs(t9.determinant()) < 1e-10);
      CHECK(numeric_rank(t_matrix(f, p, 0, false)) == 9);
    }
  }
  CHECK_THROWS_AS(t_matrix(sig22(), UPair{}, 2, false), nondeg_error);
}

TEST_CASE("minor-sum surrogate matches exact enumeration") {
  Rng rng(32);
  for (const Form& f : {sig22(), sig31()}) {
    for (int trial = 0; trial < 5; ++trial) {
      UPair p = random_pair(rng);
      MatX t6 = t_matrix(f, p, 1, false);
      double exact = minor_square_sum(t6, 6);
      double spec = minor_square_sum_spectral(t6, 6);
      CHECK(spec == Catch::Approx(exact).epsilon(1e-9));
      CHECK(p1(f, p) == Catch::Approx(exact).epsilon(1e-9));

      MatX t9 = t_matrix(f, p, 1, true);
      CHECK(minor_square_sum_spectral(t9, 8) ==
            Catch::Approx(minor_square_sum(t9, 8)).epsilon(1e-9));

      MatX t12 = t_matrix(f, p, 0, false);
      CHECK(p2(f, p) ==
            Catch::Approx(minor_square_sum(t12, 9)).epsilon(1e-9));

      Mat9 m = stacked_lower_flags(f, p);
      CHECK(r2(f, p) ==
            Catch::Approx(minor_square_sum(MatX(m), 8)).epsilon(1e-9));
    }
  }
}

TEST_CASE("P1 vanishes on equal pairs and tracks the subspace angle") {
  Rng rng(33);
  for (const Form& f : {sig22(), sig31()}) {
    for (int trial = 0; trial < 20; ++trial) {
      double r = rng.uniform(-1.0, 1.0), s = rng.uniform(-1.0, 1.0);
      CHECK(std::abs(p1(f, UPair{r, s, r, s})) < 1e-12);
    }

    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int trial = 0; trial < 500; ++trial) {
      UPair p = random_pair(rng);
      double ang = pair_angle(f, p);
      if (ang < 1e-8) continue;  // avoid 0/0 at near-coincident pairs
      double ratio = p1(f, p) / (ang * ang);
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
    INFO("form " << (f.tag == FormTag::Sig22 ? "sig22" : "sig31")
                 << " ratio range [" << lo << ", " << hi << "]");
    CHECK(lo > 1e-6);
    CHECK(hi < 1e6);
    std::printf("p1/angle^2 ratio (%s): [%.6g, %.6g]\n",
                f.tag == FormTag::Sig22 ? "sig22" : "sig31", lo, hi);
  }
}

TEST_CASE("kernel vectors satisfy their defining relations") {
  Rng rng(34);
  for (const Form& f : {sig22(), sig31()}) {
    for (int trial = 0; trial < 20; ++trial) {
      UPair p = generic_pair(f, rng);

      // V1 spans the kernel of the three-block stack.
      NVec a = v1(f, p);
      MatX t9 = t_matrix(f, p, 1, true);
      CHECK((t9 * a.vec).norm() < 1e-9);
      CHECK(std::abs(a.vec.norm() - 1.0) < 1e-12);
      CHECK(a.comp == a.vec(0));

      // V2 spans the line r^(1) cap (u1^t.r^(1) + u2^t.r^(1)).
      NVec b = v2(f, p);
      CHECK(b.vec.head(6).norm() < 1e-7);  // lies in the top flag
      MatX im1 = top_flag_image(f, p.r1, p.s1);
      MatX im2 = top_flag_image(f, p.r2, p.s2);
      MatX sum(9, 6);
      sum << im1, im2;
      MatX flag(9, 3);
      flag << Vec9::Unit(6), Vec9::Unit(7), Vec9::Unit(8);
      Vec9 oracle = intersection_oracle(flag, sum);
      CHECK(std::min((oracle - b.vec).norm(), (oracle + b.vec).norm()) <
            1e-7);
      CHECK(b.comp == b.vec(8));

      // W1 spans the triple intersection of translated upper flags:
      // orthogonal to every column of the stacked lower-flag bases.
      NVec c = w1(f, p);
      CHECK((stacked_lower_flags(f, p).transpose() * c.vec).norm() < 1e-9);
      CHECK(c.comp == c.vec(8));

      // W2 lies in the bottom flag and in the sum of the translated ones.
      NVec d = w2(f, p);
      CHECK(d.vec.tail(6).norm() < 1e-7);
      MatX lower1 = ad_u(f, -p.r1, -p.s1).block(0, 0, 9, 3);
      MatX lower2 = ad_u(f, -p.r2, -p.s2).block(0, 0, 9, 3);
      MatX lowsum(9, 6);
      lowsum << lower1, lower2;
      // Residual of least-squares projection onto the span.
      VecX coef = lowsum.colPivHouseholderQr().solve(d.vec);
      CHECK((lowsum * coef - d.vec).norm() < 1e-7);
      CHECK(d.comp == d.vec(0));
    }
  }
}

TEST_CASE("kernel constructions agree with the grid-scan evaluator") {
  Rng rng(35);
  for (const Form& f : {sig22(), sig31()}) {
    for (int trial = 0; trial < 10; ++trial) {
      UPair p = generic_pair(f, rng);
      NondegValues v = nondeg_values(f, p);
      CHECK(v.p1 == Catch::Approx(p1(f, p)).margin(1e-12));
      CHECK(v.p2 == Catch::Approx(p2(f, p)).margin(1e-12));
      CHECK(v.r1 == Catch::Approx(r1(f, p)).margin(1e-12));
      CHECK(v.r2 == Catch::Approx(r2(f, p)).margin(1e-12));
      CHECK(v.abs_s1 == Catch::Approx(std::abs(v1(f, p).comp)).margin(1e-7));
      CHECK(v.abs_s2 == Catch::Approx(std::abs(v2(f, p).comp)).margin(1e-7));
      CHECK(v.abs_l1 == Catch::Approx(std::abs(w1(f, p).comp)).margin(1e-7));
      CHECK(v.abs_l2 == Catch::Approx(std::abs(w2(f, p).comp)).margin(1e-7));
    }
  }
}

TEST_CASE("degenerate pairs are rejected") {
  // Equal elements: the three-block stack has rank 3, so R1 = 0 and P1 = 0.
  UPair eq{0.3, -0.2, 0.3, -0.2};
  CHECK_THROWS_AS(v1(sig22(), UPair{}), degenerate_pair_error);
  CHECK_THROWS_AS(v2(sig22(), eq), degenerate_pair_error);
  CHECK_THROWS_AS(v2(sig31(), eq), degenerate_pair_error);
}

TEST_CASE("grid sup scan: positivity and frozen baselines") {
  // Full scan of [-1,1]^4 at step 1/16, the grid the baselines were recorded on.
  auto scan = nondeg_scan(sig22(), 1.0 / 16.0);
  REQUIRE(scan.values.size() == 33u * 33u * 33u * 33u);

  CHECK(scan.sup.p1 > 0.0);
  CHECK(scan.sup.p2 > 0.0);
  CHECK(scan.sup.r1 > 0.0);
  CHECK(scan.sup.r2 > 0.0);
  CHECK(scan.sup.abs_s1 > 0.0);
  CHECK(scan.sup.abs_s2 > 0.0);
  CHECK(scan.sup.abs_l1 > 0.0);
  CHECK(scan.sup.abs_l2 > 0.0);
  CHECK(scan.inf.p1 >= 0.0);
  CHECK(scan.inf.p1 <= scan.sup.p1);

  std::printf("sig22 step-1/16 grid sups: p1=%.12g r1=%.12g "
              "abs_s1=%.12g abs_s2=%.12g\n",
              scan.sup.p1, scan.sup.r1, scan.sup.abs_s1, scan.sup.abs_s2);

  // Frozen baselines for regression (values measured from this grid).
  CHECK(scan.sup.p1 == Catch::Approx(kFrozenSupP1).epsilon(1e-9));
  CHECK(scan.sup.r1 == Catch::Approx(kFrozenSupR1).epsilon(1e-9));
  CHECK(scan.sup.abs_s1 == Catch::Approx(kFrozenSupS1).epsilon(1e-6));
  CHECK(scan.sup.abs_s2 == Catch::Approx(kFrozenSupS2).epsilon(1e-6));
}

TEST_CASE("scan object: serialization and sublevel table") {
  auto scan = nondeg_scan(sig31(), 0.5);
  REQUIRE(scan.per_axis == 5);
  REQUIRE(scan.values.size() == 625u);

  // pair_at enumerates the grid row-major.
  CHECK(scan.pair_at(0).r1 == -1.0);
  CHECK(scan.pair_at(scan.values.size() - 1).s2 == 1.0);

  // Sublevel fractions are monotone in eps.
  CHECK(scan.sublevel_fraction(&NondegValues::p1, 1e-6) <=
        scan.sublevel_fraction(&NondegValues::p1, 1e-2));

  auto dir = std::filesystem::temp_directory_path();
  auto path = (dir / "r9_scan_test.csv").string();
  save_scan_csv(scan, path);
  std::ifstream in(path);
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == scan.values.size() + 1);
  std::remove(path.c_str());

  auto j = to_json(scan);
  CHECK(j["form"] == "sig31");
  CHECK(j["n_points"] == 625);
  CHECK(double(j["sup"]["p1"]) == scan.sup.p1);
  CHECK(j["sublevel"]["p1"].size() == j["sublevel"]["eps"].size());

  // Determinism: a re-run is identical.
  auto scan2 = nondeg_scan(sig31(), 0.5);
  CHECK(to_json(scan2) == j);
}

TEST_CASE("moment curves evaluate to the reference points") {
  // Split form.
  Vec9 at0 = gamma_curve(sig22(), 0.0, 0.0);
  CHECK(at0(0) == 1.0);
  CHECK(at0.tail(8).norm() == 0.0);

  Vec9 at1 = gamma_curve(sig22(), 1.0, 0.0);
  Vec9 want1;
  want1 << 1, 1, 0.5, 1, 1, 0.5, 0.5, 0.5, 0.5;
  CHECK((at1 - want1).norm() < 1e-12);

  // The reparametrization is pre_curve(x, y + x^3).
  Rng rng(36);
  for (const Form& f : {sig22(), sig31()})
    for (int trial = 0; trial < 20; ++trial) {
      double x = rng.uniform(-1.0, 1.0), y = rng.uniform(-1.0, 1.0);
      Vec9 a = gamma_curve(f, x, y);
      Vec9 b = pre_curve(f, x, y + x * x * x);
      CHECK((a - b).norm() < 1e-12);
    }

  // (3,1) form pairing vector.
  Vec9 p31 = pre_curve(sig31(), 1.0, 0.0);
  Vec9 want31;
  want31 << 1, -2, 0, 1, -1, 0, 1, 0, 0.25;
  CHECK((p31 - want31).norm() < 1e-12);

  CHECK_THROWS_AS(gamma_curve(sig22(), 2.5, 0.0), nondeg_error);
}

TEST_CASE("jets are the derivatives of the curve") {
  Rng rng(37);
  for (const Form& f : {sig22(), sig31()})
    for (int trial = 0; trial < 5; ++trial) {
      double x = rng.uniform(-0.9, 0.9), y = rng.uniform(-1.0, 1.0);
      Mat9 jets = gamma_jets(f, x, y);
      CHECK((jets.row(0).transpose() - gamma_curve(f, x, y)).norm() <
            1e-12);
      // First derivative against a central difference.
      double h = 1e-5;
      Vec9 fd = (gamma_curve(f, x + h, y) - gamma_curve(f, x - h, y)) /
                (2 * h);
      CHECK((jets.row(1).transpose() - fd).norm() < 1e-6);
      // Second derivative likewise.
      Vec9 fd2 = (gamma_curve(f, x + h, y) - 2 * gamma_curve(f, x, y) +
                  gamma_curve(f, x - h, y)) /
                 (h * h);
      CHECK((jets.row(2).transpose() - fd2).norm() < 1e-4);
    }
}

TEST_CASE("wronskian: split form bounded below, (3,1) form not identically zero") {
  // Split form: minimum over the 33x33 grid on [-1,1]^2.
  double w_min = std::numeric_limits<double>::infinity();
  double w_max = 0.0;
  for (int i = 0; i <= 32; ++i)
    for (int j = 0; j <= 32; ++j) {
      double x = -1.0 + i / 16.0, y = -1.0 + j / 16.0;
      double w = wronskian(sig22(), x, y);
      w_min = std::min(w_min, w);
      w_max = std::max(w_max, w);
    }
  CHECK(w_min > 0.0);
  std::printf("sig22 wronskian grid min=%.12g max=%.12g\n", w_min, w_max);
  CHECK(w_min == Catch::Approx(kFrozenWronskianMin).epsilon(1e-9));

  // Variation across y at fixed x (reported; the lower bound is uniform).
  double at_x = 0.25;
  double vmin = std::numeric_limits<double>::infinity(), vmax = 0.0;
  for (int j = 0; j <= 32; ++j) {
    double w = wronskian(sig22(), at_x, -1.0 + j / 16.0);
    vmin = std::min(vmin, w);
    vmax = std::max(vmax, w);
  }
  std::printf("sig22 wronskian variation at x=%.2f: [%.12g, %.12g]\n",
              at_x, vmin, vmax);
  CHECK(vmin > 0.0);

  // (3,1) form: the Wronskian polynomial is not identically zero.
  double m31 = 0.0;
  for (int i = 0; i <= 32; ++i)
    for (int j = 0; j <= 32; ++j)
      m31 = std::max(m31, wronskian(sig31(), -1.0 + i / 16.0,
                                    -1.0 + j / 16.0));
  CHECK(m31 > 0.0);
}

TEST_CASE("remez scan recovers known sublevel laws") {
  std::vector<double> eps = {0.5, 0.25, 0.1, 0.05, 0.02, 0.01};

  // Linear coordinate: measure = eps exactly, exponent 1.
  auto lin = remez_scan([](const VecX& x) { return x(0); },
                        {{-1.0, 1.0}}, eps, 1 << 14);
  for (std::size_t i = 0; i < eps.size(); ++i)
    CHECK(lin.measure[i] == Catch::Approx(eps[i]).margin(2e-4));
  CHECK(lin.fitted_exponent == Catch::Approx(1.0).margin(0.01));

  // Square: measure = sqrt(eps), exponent 1/2.
  auto sq = remez_scan([](const VecX& x) { return x(0) * x(0); },
                       {{-1.0, 1.0}}, eps, 1 << 14);
  for (std::size_t i = 0; i < eps.size(); ++i)
    CHECK(sq.measure[i] == Catch::Approx(std::sqrt(eps[i])).margin(2e-3));
  CHECK(sq.fitted_exponent == Catch::Approx(0.5).margin(0.01));

  // P1 on [-1,1]^4: Monte-Carlo; the fitted exponent is at least the
  // Remez floor 1/(d k) for degree d = 48 in k = 4 variables.
  auto scan = remez_scan(
      [&](const VecX& x) {
        return p1(sig22(), UPair{x(0), x(1), x(2), x(3)});
      },
      {{-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}},
      {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}, 1 << 15, 99);
  CHECK(scan.sup_abs > 0.0);
  CHECK(scan.fitted_exponent >= 1.0 / (48.0 * 4.0));
  std::printf("p1 remez fitted exponent: %.6g (sup %.6g)\n",
              scan.fitted_exponent, scan.sup_abs);

  auto j = to_json(scan);
  CHECK(j["eps"].size() == 5);
  CHECK(double(j["fitted_exponent"]) == scan.fitted_exponent);

  CHECK_THROWS_AS(remez_scan([](const VecX& x) { return x(0); },
                             {{-1.0, 1.0}}, {0.1, 0.2}),
                  nondeg_error);
}

TEST_CASE("obstruction subspaces for the split form") {
  const Form& f = sig22();
  auto ow = obstruction_witness(f);
  REQUIRE(ow.w_inv.size() == 3);
  REQUIRE(ow.w_meet.size() == 6);

  Rng rng(38);
  for (int trial = 0; trial < 100; ++trial) {
    double r = rng.uniform(-2.0, 2.0), s = rng.uniform(-2.0, 2.0);
    Mat9 a = ad_u(f, r, s);

    // Invariance: Ad(u) maps W_inv into itself.
    for (const Vec9& b : ow.w_inv) {
      Vec9 img = a * b;
      double outside = 0.0;
      for (int i : {0, 1, 2, 3, 5, 6}) outside += img(i) * img(i);
      CHECK(std::sqrt(outside) < 1e-12);
    }

    // Every translated top flag meets W_meet: the witness vector lies in
    // both subspaces.
    Vec9 wit = meet_witness_vector(f, r, s);
    REQUIRE(wit.norm() > 0.5);
    for (int i : {1, 3, 6}) CHECK(std::abs(wit(i)) < 1e-12);
    MatX im = ad_ut(f, r, s).block(0, 6, 9, 3);
    VecX coef = im.colPivHouseholderQr().solve(wit);
    CHECK((im * coef - wit).norm() < 1e-8 * wit.norm());

    // Smallest principal angle between u^t.r^(1) and W_meet.
    MatX b1 = top_flag_image(f, r, s);
    Vec9 unit = wit / wit.norm();
    // sin(theta) for the witness direction: distance to the flag image.
    VecX c2 = b1.transpose() * unit;
    CHECK((unit - b1 * c2).norm() < 1e-8);
  }

  // The top-flag projection of W_inv has rank exactly 2.
  MatX proj(3, 3);
  for (int i = 0; i < 3; ++i)
    proj.col(i) = ow.w_inv[static_cast<std::size_t>(i)].tail(3);
  Eigen::JacobiSVD<MatX> svd(proj);
  int above = 0;
  for (int i = 0; i < 3; ++i)
    if (svd.singularValues()(i) > 1e-8) ++above;
  CHECK(above == 2);

  // The witness matrix is a genuine element of the representation.
  const auto& wb = WeightBasis::get(FormTag::Sig22);
  Vec9 wit = meet_witness_vector(f, 0.7, -0.4);
  Mat4 m = wb.from_coords(wit);
  CHECK((wb.to_coords(m) - wit).norm() < 1e-12);
  CHECK(sup_norm(Mat4(sigma(f, m) + m)) < 1e-12);

  CHECK_THROWS_AS(obstruction_witness(sig31()), nondeg_error);
  CHECK_THROWS_AS(meet_witness_vector(sig31(), 0.0, 0.0), nondeg_error);
}

TEST_CASE("the polynomials are polynomial along lines") {
  // Restrict P1 to a random affine line in (r1,s1,r2,s2)-space; a least
  // squares fit in the Chebyshev basis on [-1,1] must reproduce off-node
  // samples to high accuracy.
  Rng rng(39);
  for (const Form& f : {sig22(), sig31()}) {
    VecX base(4), dir(4);
    for (int i = 0; i < 4; ++i) {
      base(i) = rng.uniform(-0.5, 0.5);
      dir(i) = rng.uniform(-0.5, 0.5);
    }
    auto eval = [&](double t) {
      VecX x = base + t * dir;
      return p1(f, UPair{x(0), x(1), x(2), x(3)});
    };
    const int deg = 56;  // comfortably above the true line degree
    const int nodes = 2 * (deg + 1);
    MatX vand(nodes, deg + 1);
    VecX rhs(nodes);
    auto cheb_row = [&](double t, int row, MatX& m) {
      double tm2 = 1.0, tm1 = t;
      m(row, 0) = 1.0;
      if (deg >= 1) m(row, 1) = t;
      for (int k = 2; k <= deg; ++k) {
        double tk = 2.0 * t * tm1 - tm2;
        m(row, k) = tk;
        tm2 = tm1;
        tm1 = tk;
      }
    };
    double scale = 0.0;
    for (int i = 0; i < nodes; ++i) {
      double t = std::cos(M_PI * (i + 0.5) / nodes);
      cheb_row(t, i, vand);
      rhs(i) = eval(t);
      scale = std::max(scale, std::abs(rhs(i)));
    }
    VecX coef = vand.colPivHouseholderQr().solve(rhs);
    for (int probe = 0; probe < 50; ++probe) {
      double t = rng.uniform(-1.0, 1.0);
      MatX row(1, deg + 1);
      cheb_row(t, 0, row);
      double fitted = (row * coef)(0);
      CHECK(std::abs(fitted - eval(t)) <= 1e-8 * std::max(1.0, scale));
    }
  }
}

TEST_CASE("angle ratios are stable under common translation") {
  Rng rng(40);
  for (const Form& f : {sig22(), sig31()}) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      UPair p = random_pair(rng);
      double base = pair_angle(f, p);
      if (base < 1e-6) continue;
      // Common right translation by u3 in the unit ball.
      double r3 = rng.uniform(-1.0, 1.0), s3 = rng.uniform(-1.0, 1.0);
      UPair q{p.r1 + r3, p.s1 + s3, p.r2 + r3, p.s2 + s3};
      double moved = pair_angle(f, q);
      double ratio = moved / base;
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
    INFO("ratio range [" << lo << ", " << hi << "]");
    CHECK(lo > 1e-3);
    CHECK(hi < 1e3);
    std::printf("translation angle ratio (%s): [%.6g, %.6g]\n",
                f.tag == FormTag::Sig22 ? "sig22" : "sig31", lo, hi);
  }
}

TEST_CASE("orbit pairings dominate the top-weight component") {
  // For random unit v, w: the sup over a grid of u of |<v, Ad(u) w>| is
  // bounded below by a fitted multiple of |top-weight component of v|^9.
  Rng rng(41);
  for (const Form& f : {sig22(), sig31()}) {
    // Precompute the action on the grid.
    std::vector<Mat9> grid;
    for (int i = 0; i < 64; ++i)
      for (int j = 0; j < 64; ++j)
        grid.push_back(ad_u(f, -1.0 + i / 31.5, -1.0 + j / 31.5));
    double c_fit = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 200; ++trial) {
      Vec9 v, w;
      for (int i = 0; i < 9; ++i) {
        v(i) = rng.uniform(-1.0, 1.0);
        w(i) = rng.uniform(-1.0, 1.0);
      }
      v /= v.norm();
      w /= w.norm();
      double sup = 0.0;
      for (const auto& a : grid)
        sup = std::max(sup, std::abs(v.dot(a * w)));
      double floor_val = std::pow(std::abs(v(8)), 9.0);
      if (floor_val > 0.0) c_fit = std::min(c_fit, sup / floor_val);
    }
    CHECK(c_fit > 0.0);
    std::printf("orbit pairing fitted constant (%s): %.6g\n",
                f.tag == FormTag::Sig22 ? "sig22" : "sig31", c_fit);
  }
}

TEST_CASE("flag-restricted projections of u u^t are well conditioned") {
  for (const Form& f : {sig22(), sig31()}) {
    for (int lambda : {0, 1}) {
      int off = kWeightOffsets[lambda + 2];
      int dim = 9 - off;
      double worst = 0.0;
      for (int i = 0; i <= 16; ++i)
        for (int j = 0; j <= 16; ++j) {
          double r = -1.0 + i / 8.0, s = -1.0 + j / 8.0;
          Mat9 uut = ad_u(f, r, s) * ad_ut(f, r, s);
          MatX sub = uut.block(off, off, dim, dim);
          Eigen::JacobiSVD<MatX> svd(sub);
          double cond = svd.singularValues()(0) /
                        svd.singularValues()(dim - 1);
          REQUIRE(svd.singularValues()(dim - 1) > 1e-12);
          worst = std::max(worst, cond);
        }
      INFO("lambda " << lambda);
      CHECK(worst < 1e8);
      std::printf("projection cond (%s, lambda=%d): %.6g\n",
                  f.tag == FormTag::Sig22 ? "sig22" : "sig31", lambda,
                  worst);
    }
  }
}
