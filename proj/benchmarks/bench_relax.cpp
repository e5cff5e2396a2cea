#include "certbound/cert.hpp"
#include "certbound/relax.hpp"

#include <benchmark/benchmark.h>

using namespace certbound;

namespace {

POPInstance quartic() {
  const auto x1 = RationalPoly::variable(2, 0), x2 = RationalPoly::variable(2, 1);
  POPInstance pop;
  pop.num_vars = 2;
  pop.box = {Interval(-1, 1), Interval(-1, 1)};
  pop.objective = x1.pow(4) + x2.pow(4) - Rational(3) * x1 * x1 * x2 * x2 + x1;
  return pop;
}

void BM_AssembleAndSolve(benchmark::State& state) {
  const POPInstance pop = quartic();
  RelaxOptions o;
  o.order = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(pop_lower_bound(pop, o).bound);
}
BENCHMARK(BM_AssembleAndSolve)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_RoundAndCheck(benchmark::State& state) {
  const POPInstance pop = quartic();
  RelaxOptions o;
  o.order = 2;
  o.gram_shift = 1e-6;
  const Relaxation rel = assemble_Qk(pop, o);
  SDPSolution sol;
  const BoundResult b = solve_relaxation(rel, o, &sol);
  RoundOptions ro;
  ro.backoff = 1e-7;
  const Rational target = rational_from_double(b.raw_bound) / rel.objective_scale;
  for (auto _ : state) {
    const auto cert = round_project(rel, sol, target, ro);
    if (!cert) {
      state.SkipWithError("rounding failed");
      break;
    }
    benchmark::DoNotOptimize(check_certificate(*cert).verdict);
  }
}
BENCHMARK(BM_RoundAndCheck)->Unit(benchmark::kMillisecond);

}  // namespace
