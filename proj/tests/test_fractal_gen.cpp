#include <catch2/catch_amalgamated.hpp>

#include "r9/energy.hpp"
#include "r9/fractal_gen.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

using namespace r9;

namespace {

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("full branching reproduces complete dyadic grids") {
  auto f = gen_cantor(9.0, 1, 17);
  REQUIRE(f.size() == 512);
  // All points are level-1 cube centers {1/4, 3/4}^9 and are distinct.
  std::set<std::array<int, 9>> seen;
  for (const Vec9& v : f.points) {
    std::array<int, 9> key{};
    for (int a = 0; a < 9; ++a) {
      CHECK((v(a) == 0.25 || v(a) == 0.75));
      key[a] = v(a) == 0.75;
    }
    seen.insert(key);
  }
  CHECK(seen.size() == 512);

  // Depth 2 is below the default cap and yields the full 2^18 grid.
  auto g = gen_cantor(9.0, 2, 17);
  CHECK(g.size() == std::size_t{1} << 18);
}

TEST_CASE("size cap and argument validation") {
  // Projected count 2^{depth*alpha} above the cap is rejected up front.
  CHECK_THROWS_AS(gen_cantor(4.5, 7, 1), fractal_size_error);
  CHECK_THROWS_AS(gen_cantor(9.0, 3, 1), fractal_size_error);
  CHECK_THROWS_AS(gen_cantor(9.0, 2, 1, 200000), fractal_size_error);
  CHECK_THROWS_AS(gen_cantor(0.0, 3, 1), fractal_error);
  CHECK_THROWS_AS(gen_cantor(9.5, 1, 1), fractal_error);
  CHECK_THROWS_AS(gen_cantor(1.0, 0, 1), fractal_error);
}

TEST_CASE("integer-dimension generator has exact counts and low frostman") {
  auto f = gen_cantor(1.0, 8, 99);
  REQUIRE(f.size() == 256);  // branching is exactly 2 per level
  for (const Vec9& v : f.points)
    for (int a = 0; a < 9; ++a) {
      CHECK(v(a) > 0.0);
      CHECK(v(a) < 1.0);
    }
  // Hierarchical equal-splitting gives dyadic-cube constant exactly 1.
  CHECK(dyadic_frostman_constant(f, 1.0, 8) == Catch::Approx(1.0));
  // The ball-based constant carries only a small geometric factor.
  CHECK(frostman_constant(f, 1.0, 1.0 / 256.0) <= 8.0);
}

TEST_CASE("stochastic rounding hits the target count on average") {
  double lo = 625.0, hi = 1296.0;  // 5^4 and 6^4 for alpha = 2.5, depth 4
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto f = gen_cantor(2.5, 4, seed);
    CHECK(static_cast<double>(f.size()) >= lo);
    CHECK(static_cast<double>(f.size()) <= hi);
    CHECK(dyadic_frostman_constant(f, 2.5, 4) <= 8.0);
    total += static_cast<double>(f.size());
  }
  double mean = total / 20.0;
  // Expected count is 2^{4 * 2.5} = 1024.
  CHECK(mean >= 900.0);
  CHECK(mean <= 1150.0);
}

TEST_CASE("seeded generation is byte-identical") {
  auto a = gen_cantor(3.5, 4, 4242);
  auto b = gen_cantor(3.5, 4, 4242);
  auto c = gen_cantor(3.5, 4, 4243);
  save_csv(a, "fractal_a.csv");
  save_csv(b, "fractal_b.csv");
  CHECK(file_bytes("fractal_a.csv") == file_bytes("fractal_b.csv"));
  REQUIRE(a.size() == b.size());
  bool differs = c.size() != a.size();
  for (std::size_t i = 0; !differs && i < std::min(a.size(), c.size()); ++i)
    differs = a.points[i] != c.points[i];
  CHECK(differs);
  std::remove("fractal_a.csv");
  std::remove("fractal_b.csv");
}

TEST_CASE("obstructed generator stays inside the invariant subspace") {
  Form f = Form::sig22();
  auto ps = gen_obstructed(f, 2.5, 7, 5);
  // Expected count 2^{7 * 2.5} with stochastic rounding between 5^7, 6^7.
  CHECK(ps.size() >= 78125);
  CHECK(ps.size() <= 279936);
  for (std::size_t i = 0; i < ps.size(); i += 97) {
    const Vec9& v = ps.points[i];
    for (int a : {0, 1, 2, 3, 5, 6}) CHECK(v(a) == 0.0);
    for (int a : {4, 7, 8}) {
      CHECK(v(a) > 0.0);
      CHECK(v(a) < 1.0);
    }
  }
  CHECK(dyadic_frostman_constant(ps, 2.5, 7) <= 8.0);

  // The top-flag projection kills the coordinate in slot 4, so the image
  // scales like a set of dimension at most 2 (plus fit slack).
  std::vector<Vec9> proj;
  for (const Vec9& v : ps.points) proj.push_back(pi_flag(1, v));
  auto img = PointSet::uniform(std::move(proj));
  double fit = covering_exponent_fit(img, 4, 9);
  CHECK(fit <= 2.2);
  CHECK(fit >= 1.0);

  CHECK_THROWS_AS(gen_obstructed(Form::sig31(), 2.5, 7, 5),
                  nondeg_error);
  CHECK_THROWS_AS(gen_obstructed(f, 3.5, 3, 5), fractal_error);
}

TEST_CASE("subspace nets are exact and counted by their covering number") {
  auto net = gen_subspace_net({8}, 6);
  REQUIRE(net.size() == 65);
  CHECK(covering_number(net, TubePartition::cube(6)) == 65);
  for (const Vec9& v : net.points)
    for (int a = 0; a < 8; ++a) CHECK(v(a) == 0.0);

  // A line net has empirical box dimension 1 across its resolved scales.
  auto fine = gen_subspace_net({8}, 9);
  double fit = covering_exponent_fit(fine, 2, 8);
  CHECK(fit >= 0.95);
  CHECK(fit <= 1.1);

  // Two-axis net: counts multiply.
  auto plane = gen_grid({0, 8}, 3);
  CHECK(plane.size() == 81);
  CHECK(covering_number(plane, TubePartition::cube(3)) == 81);

  // The full 9-dimensional net at moderate resolution exceeds the cap.
  CHECK_THROWS_AS(gen_subspace_net({0, 1, 2, 3, 4, 5, 6, 7, 8}, 3),
                  fractal_size_error);
  CHECK_THROWS_AS(gen_subspace_net({}, 3), fractal_error);
  CHECK_THROWS_AS(gen_subspace_net({3, 3}, 3), fractal_error);
  CHECK_THROWS_AS(gen_subspace_net({9}, 3), fractal_error);
}

TEST_CASE("sampled frostman constant matches the exact scan when complete") {
  auto f = gen_cantor(2.0, 4, 7);
  double exact = frostman_constant(f, 2.0, 1.0 / 16.0);
  double full = frostman_constant_sampled(f, 2.0, 1.0 / 16.0,
                                          static_cast<int>(f.size()), 1);
  CHECK(full == Catch::Approx(exact));
  double sub = frostman_constant_sampled(f, 2.0, 1.0 / 16.0, 20, 1);
  CHECK(sub <= exact + 1e-12);
  CHECK(sub > 0.0);
}
