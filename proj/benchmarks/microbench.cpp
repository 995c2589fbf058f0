// Microbenchmarks for the inner loops the complexity claim rests on:
// attention stack scaling in sequence length, rearrange_and_trim, and
// hierarchy sampling.
#include "hicom/bench.hpp"
#include "hicom/model.hpp"
#include "hicom/packing.hpp"
#include "hicom/rng.hpp"
#include "hicom/sampler.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace hicom;

ModelConfig bench_model() {
  ModelConfig mc;
  mc.vocab_size = 256;
  mc.d = 64;
  mc.layers = 2;
  mc.heads = 4;
  mc.k = 4;
  mc.t = 32;
  return mc;
}

void BM_StackForward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  ModelConfig mc = bench_model();
  CompressorParams p = init_params(mc);
  Rng rng(42);
  Mat x(n, mc.d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < mc.d; ++j) x(i, j) = rng.normal(0.0, 1.0);
  std::vector<std::uint8_t> valid(n, 1);
  for (auto _ : state) {
    Mat h = stack_forward(p, x, valid, nullptr);
    benchmark::DoNotOptimize(h.data());
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_StackForward)->RangeMultiplier(2)->Range(32, 512)->Complexity();

TokenGrid half_valid_grid(int rows, int cols) {
  TokenGrid g(rows, cols);
  Rng rng(7);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (rng.uniform_real() < 0.5) {
        g.id(r, c) = static_cast<TokenId>(2 + rng.uniform_int(0, 99));
        g.valid(r, c) = 1;
      }
  return g;
}

void BM_RearrangeAndTrim(benchmark::State& state) {
  TokenGrid g = half_valid_grid(static_cast<int>(state.range(0)), 128);
  for (auto _ : state) {
    TokenGrid out = rearrange_and_trim(g);
    benchmark::DoNotOptimize(out.ids.data());
  }
}
BENCHMARK(BM_RearrangeAndTrim)->Arg(16)->Arg(64)->Arg(256);

void BM_BuildHierarchy(benchmark::State& state) {
  TextGraph g = bench_graph(512, 8, 4, 5);
  NodeList targets;
  for (NodeId v = 0; v < 64; ++v) targets.push_back(v);
  for (auto _ : state) {
    Hierarchy h = build_hierarchy(g, targets, {4, 4}, 11);
    benchmark::DoNotOptimize(h.levels.data());
  }
}
BENCHMARK(BM_BuildHierarchy)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
