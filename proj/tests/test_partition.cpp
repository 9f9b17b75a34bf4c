#include <catch2/catch_amalgamated.hpp>

#include "r9/partition_cover.hpp"
#include "r9/rng.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <unordered_map>
#include <vector>

using namespace r9;

namespace {

Vec9 random_vec9(Rng& rng, double scale) {
  Vec9 v;
  for (int i = 0; i < 9; ++i) v(i) = rng.uniform(-scale, scale);
  return v;
}

PointSet random_set(Rng& rng, int n, double scale) {
  std::vector<Vec9> pts;
  for (int i = 0; i < n; ++i) pts.push_back(random_vec9(rng, scale));
  return PointSet::uniform(std::move(pts));
}

}  // namespace

TEST_CASE("point sets validate and normalize weights") {
  CHECK_THROWS_AS(PointSet::uniform({}), partition_error);
  auto ps = PointSet::uniform({Vec9::Zero(), Vec9::Unit(0)});
  CHECK(ps.weights_normalized());
  CHECK(ps.weights[0] == 0.5);
  auto wps = PointSet::weighted({Vec9::Zero(), Vec9::Unit(0)}, {3.0, 1.0});
  CHECK(wps.weights_normalized());
  CHECK(wps.weights[0] == Catch::Approx(0.75));
  CHECK_THROWS_AS(PointSet::weighted({Vec9::Zero()}, {0.0}), partition_error);
  CHECK_THROWS_AS(PointSet::weighted({Vec9::Zero()}, {1.0, 1.0}),
                  partition_error);
}

TEST_CASE("csv round trip is bit exact") {
  Rng rng(101);
  std::vector<Vec9> pts;
  for (int i = 0; i < 40; ++i) pts.push_back(random_vec9(rng, 10.0));
  pts.push_back(Vec9::Constant(1.0 / 3.0));
  pts.push_back(Vec9::Constant(0x1.fffffffffffffp-4));
  std::vector<double> w(pts.size());
  for (auto& x : w) x = rng.uniform(0.1, 2.0);

  auto dir = std::filesystem::temp_directory_path();
  auto path_w = (dir / "r9_test_pts_w.csv").string();
  auto path_u = (dir / "r9_test_pts_u.csv").string();

  auto weighted = PointSet::weighted(pts, w);
  save_csv(weighted, path_w, true);
  auto back_w = load_csv(path_w);
  REQUIRE(back_w.size() == weighted.size());
  for (std::size_t i = 0; i < weighted.size(); ++i) {
    for (int j = 0; j < 9; ++j)
      CHECK(back_w.points[i](j) == weighted.points[i](j));
    CHECK(back_w.weights[i] == Catch::Approx(weighted.weights[i]).epsilon(0)
                                   .margin(1e-18));
  }

  auto uniform = PointSet::uniform(pts);
  save_csv(uniform, path_u, false);
  auto back_u = load_csv(path_u);
  REQUIRE(back_u.size() == uniform.size());
  for (std::size_t i = 0; i < uniform.size(); ++i)
    for (int j = 0; j < 9; ++j)
      CHECK(back_u.points[i](j) == uniform.points[i](j));
  CHECK(back_u.weights[0] == uniform.weights[0]);
  std::remove(path_w.c_str());
  std::remove(path_u.c_str());
}

TEST_CASE("exponent tuples validate and obey the lattice algebra") {
  CHECK_THROWS_AS(RTuple::of(0, 0.1, 0.5, 0.5, 1), partition_error);
  CHECK_THROWS_AS(RTuple::of(0.5, 0.25, 0.5, 0.5, 1), partition_error);
  CHECK_THROWS_AS(RTuple::of(0, 0, 0, 0, 1.25), partition_error);
  auto r = RTuple::of(0, 0.25, 0.5, 0.75, 1);
  CHECK(r[2] == 0.5);
  // join with the constant tuple at the fourth entry flattens the head.
  auto r4 = RTuple::of(0.75, 0.75, 0.75, 0.75, 0.75);
  CHECK(tuple_join(r, r4) == RTuple::of(0.75, 0.75, 0.75, 0.75, 1));
  // meet with the constant tuple at the second entry flattens the tail.
  auto r2 = RTuple::of(0.25, 0.25, 0.25, 0.25, 0.25);
  CHECK(tuple_meet(r, r2) == RTuple::of(0, 0.25, 0.25, 0.25, 0.25));
  CHECK(tuple_join(r, r) == r);
  CHECK(tuple_meet(r, r) == r);
}

TEST_CASE("atom keys match the per-weight box structure") {
  // Constant tuple: plain dyadic cubes at scale delta.
  auto cube = TubePartition::cube(3);
  Vec9 w = Vec9::Constant(0.3);
  auto k = atom_key(cube, w);
  for (int i = 0; i < 9; ++i) CHECK(k.idx[i] == 2);  // floor(0.3 / 0.125)

  // Tuple (0,0,0,0,1): only the highest-weight coordinate is constrained.
  auto top = TubePartition::make(4, RTuple::of(0, 0, 0, 0, 1));
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Vec9 v;
    for (int i = 0; i < 9; ++i) v(i) = rng.uniform(0.0, 1.0);
    v(8) = 0.3;
    auto key = atom_key(top, v);
    for (int i = 0; i < 8; ++i) CHECK(key.idx[i] == 0);
    CHECK(key.idx[8] == 4);
  }

  // The graded tuple gives the expected per-weight scales.
  auto aniso = TubePartition::make(8, RTuple::of(0, 0.25, 0.5, 0.75, 1));
  CHECK(aniso.scale(0) == 1.0);          // weight -2
  CHECK(aniso.scale(1) == 0.25);         // weight -1
  CHECK(aniso.scale(3) == 0.0625);       // weight 0
  CHECK(aniso.scale(6) == 0.015625);     // weight 1
  CHECK(aniso.scale(8) == 0.00390625);   // weight 2

  CHECK_THROWS_AS(atom_key(cube, Vec9::Constant(
                               std::numeric_limits<double>::infinity())),
                  partition_error);
}

TEST_CASE("covering numbers on explicit configurations") {
  auto cube = TubePartition::cube(4);
  double delta = cube.delta();

  CHECK(covering_number(PointSet::uniform({Vec9::Constant(0.37)}), cube) ==
        1);

  // Three points spaced exactly one box apart along the top weight axis.
  std::vector<Vec9> line = {Vec9::Zero(), delta * Vec9::Unit(8),
                            2 * delta * Vec9::Unit(8)};
  CHECK(covering_number(PointSet::uniform(line), cube) == 3);

  // Uniform 16x16 grid in the two weight-1 coordinates, delta = 1/16.
  std::vector<Vec9> grid;
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j) {
      Vec9 v = Vec9::Zero();
      v(6) = i / 16.0;
      v(7) = j / 16.0;
      grid.push_back(v);
    }
  CHECK(covering_number(PointSet::uniform(grid), cube) == 256);
}

TEST_CASE("covering numbers: translation, monotonicity, join bound") {
  Rng rng(77);
  auto p = TubePartition::make(8, RTuple::of(0.25, 0.25, 0.5, 1, 1));
  auto q = TubePartition::make(8, RTuple::of(0, 0.5, 0.5, 0.75, 0.75));
  for (int trial = 0; trial < 10; ++trial) {
    auto a = random_set(rng, 200, 2.0);

    // Shift each coordinate by an integer multiple of its atom scale.
    auto shifted = a;
    for (auto& v : shifted.points)
      for (int i = 0; i < 9; ++i)
        v(i) += (3 + static_cast<double>(trial)) * p.scale(i);
    CHECK(covering_number(shifted, p) == covering_number(a, p));

    // Subset monotonicity.
    auto sub = PointSet::uniform(std::vector<Vec9>(a.points.begin(),
                                                   a.points.begin() + 80));
    CHECK(covering_number(sub, p) <= covering_number(a, p));

    // Coarser partition covers with fewer atoms.
    CHECK(covering_number(a, meet(p, q)) <= covering_number(a, p));

    // Join bound.
    CHECK(covering_number(a, join(p, q)) <=
          covering_number(a, p) * covering_number(a, q));
  }
  CHECK_THROWS_AS(join(p, TubePartition::cube(4)), partition_error);
}

TEST_CASE("atom volume bookkeeping is exact in log2 arithmetic") {
  auto p = TubePartition::make(8, RTuple::of(0, 0.25, 0.5, 0.75, 1));
  // Sum of dim * exponent: 1*0 + 2*(1/4) + 3*(1/2) + 2*(3/4) + 1*1 = 4.5.
  CHECK(p.log2_volume_64() == -static_cast<std::int64_t>(8 * 4.5 * 64));
  auto cube = TubePartition::cube(5);
  CHECK(cube.log2_volume_64() == -5 * 9 * 64);
}

TEST_CASE("refinement constants for grid partitions") {
  auto p = TubePartition::cube(5);
  CHECK(refinement_constant(p, p) == 1);
  CHECK(refinement_constant(p, TubePartition::cube(4)) == 512);

  // Full cube at 2^-8 against the graded tube partition: the per-coordinate
  // ratio product is 2^{8 * 4.5} = 2^36.
  auto fine = TubePartition::cube(8);
  auto tube = TubePartition::make(8, RTuple::of(0, 0.25, 0.5, 0.75, 1));
  CHECK(refinement_constant(fine, tube) == (std::int64_t{1} << 36));

  // Coarser-than-coarse is rejected.
  CHECK_THROWS_AS(refinement_constant(tube, fine), partition_error);

  // Fractional scale ratios round up per coordinate: base 2^-1 cube against
  // the tube with all exponents 1/2 gives ceil(2^{1/2})^9 = 2^9.
  auto half = TubePartition::make(1, RTuple::of(0.5, 0.5, 0.5, 0.5, 0.5));
  CHECK(refinement_constant(TubePartition::cube(1), half) == 512);
}

TEST_CASE("refinement constant bounds the actual atom splitting") {
  Rng rng(19);
  auto fine = TubePartition::make(6, RTuple::of(0.5, 0.5, 0.75, 1, 1));
  auto coarse = TubePartition::make(6, RTuple::of(0.25, 0.5, 0.5, 0.5, 1));
  std::int64_t L = refinement_constant(fine, coarse);
  for (int trial = 0; trial < 5; ++trial) {
    auto a = random_set(rng, 400, 1.0);
    // Count fine atoms inside each coarse atom; none may exceed L.
    std::unordered_map<std::size_t, std::unordered_set<AtomKey, AtomKeyHash>>
        buckets;
    AtomKeyHash h;
    for (const auto& v : a.points)
      buckets[h(atom_key(coarse, v))].insert(atom_key(fine, v));
    for (const auto& [key, fines] : buckets)
      CHECK(static_cast<std::int64_t>(fines.size()) <= L);
  }
}
