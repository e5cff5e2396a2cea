#include "certbound/interval.hpp"
#include "certbound/parser.hpp"
#include "certbound/poly.hpp"

#include <benchmark/benchmark.h>

using namespace certbound;

namespace {

RationalPoly dense(std::size_t n, unsigned degree) {
  RationalPoly p(n);
  long c = 1;
  const MonomialBasis basis(n, degree);
  for (const auto& m : basis.monomials()) p.add_term(m, Rational(c++ % 7 - 3) / 8);
  return p;
}

void BM_RationalProduct(benchmark::State& state) {
  const auto p = dense(3, static_cast<unsigned>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(p * p);
}
BENCHMARK(BM_RationalProduct)->Arg(2)->Arg(4);

void BM_RealEvaluate(benchmark::State& state) {
  const RealPoly p = to_real(dense(4, 4));
  const std::vector<double> x{0.1, -0.3, 0.7, 0.2};
  for (auto _ : state) benchmark::DoNotOptimize(p.evaluate(x));
}
BENCHMARK(BM_RealEvaluate);

void BM_IntervalEvalSchwefel(benchmark::State& state) {
  const Problem p = parse_problem(
      "vars: x1 in [1,500], x2 in [1,500], x3 in [1,500]\n"
      "objective: -x1*sin(sqrt(x1)) - x2*sin(sqrt(x2)) - x3*sin(sqrt(x3))");
  for (auto _ : state) benchmark::DoNotOptimize(interval_eval(*p.objective, p.box));
}
BENCHMARK(BM_IntervalEvalSchwefel);

}  // namespace
