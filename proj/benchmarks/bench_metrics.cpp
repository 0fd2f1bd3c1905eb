#include <benchmark/benchmark.h>

#include <random>

#include "labelgen/dist_metrics.hpp"
#include "labelgen/segbench.hpp"

using namespace labelgen;

namespace {

EmbeddingSet gaussian_set(std::size_t n, std::size_t d, double shift, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(shift, 1.0);
  std::vector<double> v(n * d);
  for (auto& x : v) x = nd(gen);
  return EmbeddingSet(n, d, std::move(v));
}

}  // namespace

static void BM_Fid(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto a = gaussian_set(2 * d, d, 0.0, 1), b = gaussian_set(2 * d, d, 0.2, 2);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::fid(a, b));
}
BENCHMARK(BM_Fid)->Arg(16)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_Kid(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = gaussian_set(n, 64, 0.0, 3), b = gaussian_set(n, 64, 0.2, 4);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::kid(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Kid)->RangeMultiplier(2)->Range(64, 1024)->Complexity(benchmark::oNSquared)->Unit(benchmark::kMillisecond);

static void BM_KidBlocked(benchmark::State& state) {
  const auto a = gaussian_set(2000, 64, 0.0, 5), b = gaussian_set(2000, 64, 0.2, 6);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::kid_blocked(a, b, static_cast<std::size_t>(state.range(0))));
}
BENCHMARK(BM_KidBlocked)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_Accumulate(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  std::mt19937_64 gen(7);
  std::vector<std::uint8_t> p(static_cast<std::size_t>(side * side)), g(p.size());
  for (auto& x : p) x = static_cast<std::uint8_t>(gen() % 17);
  for (auto& x : g) x = static_cast<std::uint8_t>(gen() % 17);
  const Mask pred(side, side, p), gt(side, side, g);
  segbench::TaskSpec task;
  task.name = "bench";
  task.num_labels = 16;
  for (int i = 1; i <= 16; ++i) task.class_map[i] = i;
  segbench::ConfusionMatrix cm(16);
  for (auto _ : state) segbench::accumulate(cm, pred, gt, task);
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_Accumulate)->Arg(64)->Arg(512);

BENCHMARK_MAIN();
