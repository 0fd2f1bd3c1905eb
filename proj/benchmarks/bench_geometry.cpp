#include <benchmark/benchmark.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "labelgen/geometry.hpp"

using namespace labelgen;

namespace {

Mask blobs(int side, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  Mask m(side, side);
  for (int b = 0; b < 6; ++b) {
    const int cx = static_cast<int>(gen() % side), cy = static_cast<int>(gen() % side);
    const int r = 4 + static_cast<int>(gen() % (side / 6));
    for (int y = std::max(0, cy - r); y < std::min(side, cy + r); ++y) {
      for (int x = std::max(0, cx - r); x < std::min(side, cx + r); ++x) {
        if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) m.set(x, y, 1);
      }
    }
  }
  return m;
}

std::vector<geometry::Point> ring(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> jitter(-0.01, 0.01);
  std::vector<geometry::Point> p(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = 6.283185307179586 * double(i) / double(n);
    p[i] = {0.5 + 0.4 * std::cos(t) + jitter(gen), 0.5 + 0.4 * std::sin(t) + jitter(gen)};
  }
  return p;
}

}  // namespace

static void BM_ConnectedComponents(benchmark::State& state) {
  const Mask m = blobs(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(geometry::connected_components(m));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(m.size()));
}
BENCHMARK(BM_ConnectedComponents)->Arg(64)->Arg(256)->Arg(512);

static void BM_MaskStats(benchmark::State& state) {
  const Mask m = blobs(static_cast<int>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(geometry::mask_stats(m));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(m.size()));
}
BENCHMARK(BM_MaskStats)->Arg(64)->Arg(256)->Arg(512);

static void BM_LargestPolygon(benchmark::State& state) {
  const Mask m = blobs(static_cast<int>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(geometry::largest_component_polygon(m));
}
BENCHMARK(BM_LargestPolygon)->Arg(128)->Arg(512);

static void BM_SimplifyDP(benchmark::State& state) {
  const auto pts = ring(static_cast<std::size_t>(state.range(0)), 4);
  for (auto _ : state) benchmark::DoNotOptimize(geometry::simplify_dp(pts, 0.01));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimplifyDP)->Range(64, 16384);

static void BM_Chamfer(benchmark::State& state) {
  const auto a = ring(static_cast<std::size_t>(state.range(0)), 5);
  const auto b = ring(static_cast<std::size_t>(state.range(0)), 6);
  for (auto _ : state) benchmark::DoNotOptimize(geometry::chamfer(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Chamfer)->RangeMultiplier(2)->Range(16, 1024)->Complexity(benchmark::oNSquared);

BENCHMARK_MAIN();
