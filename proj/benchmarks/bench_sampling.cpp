#include <benchmark/benchmark.h>

#include <random>

#include "labelgen/rng.hpp"
#include "labelgen/sampling.hpp"

using namespace labelgen;

namespace {

sampling::CategoricalDist skewed(std::size_t n) {
  std::mt19937_64 gen(1);
  std::gamma_distribution<double> g(0.5, 1.0);
  std::vector<double> p(n);
  double s = 0.0;
  for (auto& x : p) s += (x = g(gen));
  for (auto& x : p) x /= s;
  return sampling::CategoricalDist(std::move(p));
}

std::vector<sampling::ScoredId> scored(std::size_t n) {
  std::mt19937_64 gen(2);
  std::vector<sampling::ScoredId> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = {"s" + std::to_string(i), double(gen() % 1000) / 1000.0};
  return s;
}

}  // namespace

static void BM_TruncatedNormal(benchmark::State& state) {
  Rng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(sampling::truncated_normal(128, 0.9, rng));
  state.SetItemsProcessed(state.iterations() * 128);
}
BENCHMARK(BM_TruncatedNormal);

static void BM_NucleusSample(benchmark::State& state) {
  const auto dist = skewed(static_cast<std::size_t>(state.range(0)));
  Rng rng(4);
  for (auto _ : state) benchmark::DoNotOptimize(sampling::nucleus_topk_sample(dist, 0.9, 40, rng));
}
BENCHMARK(BM_NucleusSample)->Arg(1000)->Arg(32000);

static void BM_JsDivergence(benchmark::State& state) {
  std::vector<sampling::CategoricalDist> heads;
  for (int i = 0; i < 10; ++i) heads.push_back(skewed(static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(sampling::js_divergence(heads));
}
BENCHMARK(BM_JsDivergence)->Arg(2)->Arg(1000);

static void BM_ConfidenceRejection(benchmark::State& state) {
  const auto s = scored(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sampling::confidence_rejection(s, 0.9));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ConfidenceRejection)->RangeMultiplier(4)->Range(1 << 10, 1 << 18)->Complexity(benchmark::oNLogN);

static void BM_UncertaintyFilter(benchmark::State& state) {
  const auto s = scored(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sampling::uncertainty_filter(s, 0.1));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_UncertaintyFilter)->RangeMultiplier(4)->Range(1 << 10, 1 << 18)->Complexity(benchmark::oNLogN);

BENCHMARK_MAIN();
