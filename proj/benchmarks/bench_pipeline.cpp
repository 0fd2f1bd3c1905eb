#include <benchmark/benchmark.h>

#include "labelgen/fusion_planner.hpp"
#include "labelgen/pipeline.hpp"

using namespace labelgen;

static void BM_ToyDraw(benchmark::State& state) {
  pipeline::ToySourceConfig cfg;
  cfg.resolution = static_cast<int>(state.range(0));
  const pipeline::ToySource source(cfg);
  std::uint64_t counter = 0;
  const bool ensemble = state.range(1) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(source.draw(counter++, ensemble));
}
BENCHMARK(BM_ToyDraw)->Args({64, 0})->Args({64, 1})->Args({128, 1});

static void BM_SynthOfflineInMemory(benchmark::State& state) {
  const pipeline::ToySource source(pipeline::ToySourceConfig{});
  pipeline::PipelineSpec spec;
  spec.count = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(pipeline::synth_offline(source, spec));
}
BENCHMARK(BM_SynthOfflineInMemory)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

static void BM_OnlineStream(benchmark::State& state) {
  const pipeline::ToySource source(pipeline::ToySourceConfig{});
  pipeline::PipelineSpec spec;
  spec.mode = pipeline::Mode::kOnline;
  spec.filters.uncertainty_fraction = 0.0;
  pipeline::OnlineStream stream(source, spec);
  for (auto _ : state) benchmark::DoNotOptimize(stream.next());
}
BENCHMARK(BM_OnlineStream);

static void BM_PlanGrouped(benchmark::State& state) {
  const auto layers = fusion::vqgan_example_layers();
  for (auto _ : state) benchmark::DoNotOptimize(fusion::compare(layers, 128));
}
BENCHMARK(BM_PlanGrouped);

BENCHMARK_MAIN();
