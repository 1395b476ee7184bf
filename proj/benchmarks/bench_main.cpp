// Micro-benchmarks for the parsing, transform and search hot paths.

#include <benchmark/benchmark.h>

#include <string>

#include "oat/interp.hpp"
#include "oat/kernel.hpp"
#include "oat/region.hpp"
#include "oat/search.hpp"
#include "oat/transform.hpp"

namespace {

const std::string kMatmul =
    "dimension a(n, n)\ndimension b(n, n)\ndimension c(n, n)\n"
    "do i=1, n\n  do j=1, n\n    do k=1, n\n"
    "      c(i, j) = c(i, j) + a(i, k) * b(k, j)\n"
    "    enddo\n  enddo\nenddo\n";

void BM_ParseKernel(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(oat::parse_kernel(kMatmul));
}
BENCHMARK(BM_ParseKernel);

void BM_Unroll(benchmark::State& state) {
  oat::KernelProgram prog = oat::parse_kernel(kMatmul);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        oat::unroll(prog, {{"i", state.range(0)}, {"j", state.range(0)}}));
}
BENCHMARK(BM_Unroll)->Arg(2)->Arg(4)->Arg(8);

void BM_Interpret(benchmark::State& state) {
  oat::KernelProgram prog = oat::parse_kernel(kMatmul);
  for (auto _ : state) {
    oat::ExecEnv env;
    env.scalars["n"] = double(state.range(0));
    oat::allocate_declared(prog, env);
    oat::seed_arrays(env, 7);
    oat::interpret(prog, env);
    benchmark::DoNotOptimize(env.scalars);
  }
}
BENCHMARK(BM_Interpret)->Arg(8)->Arg(16);

void BM_ExhaustiveSearch(benchmark::State& state) {
  oat::SearchSpace space;
  space.region_name = "bench";
  space.method = oat::SearchMethod::Exhaustive;
  for (int d = 0; d < 2; ++d) {
    oat::Dim dim;
    dim.name = "d" + std::to_string(d);
    for (long long v = 1; v <= state.range(0); ++v) dim.domain.push_back(v);
    space.dims.push_back(dim);
  }
  for (auto _ : state) {
    auto res = oat::exhaustive_search(space, [](const oat::Assignment& a) {
      double c = 0.0;
      for (long long v : a) c += double((v - 3) * (v - 3));
      return c;
    });
    benchmark::DoNotOptimize(res);
  }
}
BENCHMARK(BM_ExhaustiveSearch)->Arg(16)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
