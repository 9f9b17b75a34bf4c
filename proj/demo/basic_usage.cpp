// A short tour of the library: set up a symmetric pair, inspect the
// 9-dimensional representation, generate a fractal point set, run one
// projection experiment, and derive the bootstrap constant ledger.

#include "r9/experiments.hpp"
#include "r9/fractal_gen.hpp"
#include "r9/ledger.hpp"
#include "r9/lie_core.hpp"
#include "r9/regularize.hpp"
#include "r9/weight_rep.hpp"

#include <cstdio>

int main() {
  using namespace r9;

  // 1. The split symmetric pair on sl4: involution, eigenspace split,
  //    and the diagonal flow that expands the horospherical directions.
  Form f = Form::sig22();
  std::printf("fixed subalgebra dim: %zu, complement dim: %zu\n",
              h_basis(f).size(), r_basis_generic(f).size());
  Mat4 x = u_generator(f, 0.3, -0.2);
  HRSplit split = split_h_r(f, bracket(x, diag_generator()));
  std::printf("bracket with the flow generator: |h-part| = %.3g, "
              "|r-part| = %.3g\n",
              sup_norm(split.h), sup_norm(split.r));

  // 2. Weight coordinates: Ad(a_t) acts diagonally with rates
  //    e^{lambda t}, lambda in {-2,-1,-1,0,0,0,1,1,2}.
  Mat9 a = ad_a(f, 1.0);
  std::printf("expansion rates at t=1:");
  for (int i = 0; i < 9; ++i) std::printf(" %.3f", a(i, i));
  std::printf("\n");

  // 3. A hierarchical random set of box dimension ~2.5 at scale 2^-5,
  //    regularized so branching is dyadically constant per level.
  PointSet set = gen_cantor(2.5, 5, /*seed=*/42);
  Filtration filt = Filtration::of(
      {TubePartition::cube(1), TubePartition::cube(3), TubePartition::cube(5)});
  RegularizedSet reg = bourgain_regularize_set(set, filt);
  std::printf("generated %zu points, regular subset keeps %zu\n", set.size(),
              reg.subset.size());

  // 4. One subcritical projection experiment: for random u-parameters,
  //    compare the projected covering count against the theory's bound.
  ExperimentReport rep =
      exp_subcritical(f, set, /*lambda=*/1, /*neg_log2_delta=*/5,
                      /*eps=*/0.1, /*n_samples=*/20, /*adversarial_k=*/2,
                      /*seed=*/7);
  std::printf("subcritical experiment: exceptional fraction %.2f over %zu "
              "samples\n",
              rep.exceptional_fraction, rep.samples.size());

  // 5. The constant ledger at the reference input: exact rationals for
  //    the dimension progression, certified log-space intervals for the
  //    astronomically small scales.
  LedgerInput in = make_ledger_input("0.8", "0.8", /*log_r=*/1e6);
  LedgerReport ledger = derive_constants(in);
  std::printf("ledger: theta = %s, p_fin = %s, ln(eps) ~ %.4g\n",
              ledger.theta.str().c_str(), ledger.p_fin.str().c_str(),
              xn_mid_log(ledger.eps));
  CheckTable table = check_inequalities(in, ledger);
  for (const auto& row : table.rows)
    std::printf("  %-20s %s\n", row.name.c_str(),
                row.pass ? "pass" : "FAIL");
  return 0;
}
