#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <unistd.h>

#include "labelgen/error.hpp"
#include "labelgen/formats.hpp"
#include "labelgen/pipeline.hpp"
#include "labelgen/sampling.hpp"
#include "oracles.hpp"

using namespace labelgen;
using namespace labelgen::pipeline;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  static std::atomic<int> n{0};
  const auto dir = fs::temp_directory_path() /
                   ("labelgen-pipeline-" + std::to_string(::getpid()) + "-" + name + "-" +
                    std::to_string(n++));
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

PipelineSpec offline(std::size_t n, double rate, double fraction) {
  PipelineSpec s;
  s.filters.rejection_rate = rate;
  s.filters.uncertainty_fraction = fraction;
  s.count = n;
  return s;
}

ToySource small_source(std::uint64_t seed = 1) {
  ToySourceConfig c;
  c.seed = seed;
  return ToySource(c);
}

}  // namespace

TEST(PoolSize, Formula) {
  EXPECT_EQ(candidate_pool_size(10, 0.9, 0.1), 112u);
  EXPECT_EQ(candidate_pool_size(10, 0.0, 0.0), 10u);
  EXPECT_EQ(candidate_pool_size(1000, 0.9, 0.1), 11112u);
  EXPECT_EQ(candidate_pool_size(1, 0.5, 0.0), 2u);
}

TEST(SpecValidation, OnlineExcludesUncertainty) {
  PipelineSpec s;
  s.mode = Mode::kOnline;
  s.count = 5;
  EXPECT_THROW(s.validate(), Error);
  s.filters.uncertainty_fraction = 0.0;
  EXPECT_NO_THROW(s.validate());
  EXPECT_THROW(offline(0, 0.9, 0.1).validate(), Error);
}

TEST(ToySourceDraw, DeterministicPerCounter) {
  const auto src = small_source(5);
  const auto a = src.draw(42, true);
  const auto b = src.draw(42, true);
  EXPECT_EQ(a.sample.id, "toy-000000000042");
  EXPECT_EQ(a.sample.image, b.sample.image);
  EXPECT_EQ(a.sample.mask, b.sample.mask);
  EXPECT_EQ(a.confidence, b.confidence);
  EXPECT_NE(src.draw(43, false).sample.latent_seed, a.sample.latent_seed);
  EXPECT_FALSE(src.draw(42, false).ensemble);
  EXPECT_EQ(src.draw(42, false).sample.mask, a.sample.mask);
}

TEST(SynthOffline, NoFiltersIsCounterOrder) {
  const auto src = small_source();
  const auto r = synth_offline(src, offline(10, 0.0, 0.0));
  ASSERT_EQ(r.manifest.entries.size(), 10u);
  EXPECT_EQ(r.initial_pool, 10u);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(r.manifest.entries[i].id, sample_id(i));
}

TEST(SynthOffline, DefaultPoolAndKeptSet) {
  const auto src = small_source(2);
  const auto r = synth_offline(src, offline(10, 0.9, 0.1));
  EXPECT_EQ(r.initial_pool, 112u);
  ASSERT_EQ(r.manifest.entries.size(), 10u);
  EXPECT_EQ(r.manifest.metadata_value("rejection_rate"), "0.9");
  EXPECT_EQ(r.manifest.metadata_value("uncertainty_fraction"), "0.1");
  EXPECT_EQ(r.manifest.metadata_value("truncation_psi"), "0.9");
  EXPECT_EQ(r.manifest.metadata_value("nucleus_p"), "0.92");
  EXPECT_EQ(r.manifest.metadata_value("top_k"), "200");

  // Recompute the two filter stages from the recorded scores.
  std::vector<std::pair<std::string, double>> conf;
  for (const auto& c : r.candidates) conf.emplace_back(c.id, c.confidence);
  const auto after_rejection = oracle::sort_rejection(conf, 0.9);
  std::vector<std::pair<std::string, double>> unc;
  for (const auto& c : r.candidates) {
    EXPECT_EQ(c.passed_rejection, after_rejection.contains(c.id));
    if (c.passed_rejection) {
      ASSERT_TRUE(c.uncertainty);
      unc.emplace_back(c.id, *c.uncertainty);
    }
  }
  const auto survivors = oracle::sort_uncertainty(unc, 0.1);
  std::vector<std::string> want(survivors.begin(), survivors.end());  // ids sort by counter
  want.resize(10);
  std::vector<std::string> got;
  for (const auto& e : r.manifest.entries) got.push_back(e.id);
  EXPECT_EQ(got, want);
}

TEST(SynthOffline, TopsUpWhenShort) {
  // A tiny n makes ceil() rounding leave fewer than n survivors in the first pool.
  const auto src = small_source(3);
  for (std::size_t n : {1u, 3u, 7u}) {
    const auto r = synth_offline(src, offline(n, 0.5, 0.5));
    EXPECT_EQ(r.manifest.entries.size(), n);
    EXPECT_GE(r.candidates.size(), r.initial_pool);
    if (r.candidates.size() > r.initial_pool) {
      EXPECT_EQ(r.manifest.metadata_value("pool"), std::to_string(r.candidates.size()));
    }
  }
}

TEST(SynthOffline, ByteIdenticalAcrossRunsAndWorkers) {
  const auto src = small_source(4);
  auto spec = offline(12, 0.9, 0.1);
  spec.output_dir = scratch("a");
  synth_offline(src, spec);
  const auto first = spec.output_dir;
  spec.output_dir = scratch("b");
  spec.workers = 3;
  synth_offline(src, spec);
  const auto second = spec.output_dir;

  EXPECT_EQ(slurp(first / "manifest.tsv"), slurp(second / "manifest.tsv"));
  const auto m = formats::read_manifest(first / "manifest.tsv");
  ASSERT_EQ(m.entries.size(), 12u);
  for (const auto& e : m.entries) {
    EXPECT_EQ(slurp(first / e.image_path), slurp(second / e.image_path));
    EXPECT_EQ(slurp(first / e.mask_path), slurp(second / e.mask_path));
    const auto mask = formats::read_mask(first / e.mask_path);
    EXPECT_EQ(mask, src.draw(std::stoull(e.id.substr(4)), false).sample.mask);
  }
  fs::remove_all(first);
  fs::remove_all(second);
}

TEST(OnlineStream, DistinctIdsAndDeterministic) {
  const auto src = small_source(6);
  PipelineSpec spec;
  spec.mode = Mode::kOnline;
  spec.filters.uncertainty_fraction = 0.0;
  spec.filters.rejection_rate = 0.0;
  OnlineStream a(src, spec), b(src, spec);
  std::set<std::string> ids;
  for (int i = 0; i < 10000; ++i) {
    const auto s = a.next();
    ids.insert(s.id);
    if (i < 50) EXPECT_EQ(s.id, b.next().id);
  }
  EXPECT_EQ(ids.size(), 10000u);
}

TEST(OnlineStream, CalibratedAcceptanceRate) {
  const auto src = small_source(7);
  PipelineSpec spec;
  spec.mode = Mode::kOnline;
  spec.filters.uncertainty_fraction = 0.0;
  spec.filters.rejection_rate = 0.9;
  OnlineStream s(src, spec);
  ASSERT_TRUE(s.threshold());
  std::size_t accepted = 0;
  std::string last;
  while (s.candidates_drawn() < 10000) {
    const auto x = s.next();
    if (s.candidates_drawn() <= 10000) ++accepted;
    EXPECT_GT(x.id, last);
    EXPECT_GT(*x.confidence, *s.threshold());
    last = x.id;
  }
  EXPECT_NEAR(double(accepted) / 10000.0, 0.1, 0.02);

  OnlineStream t(src, spec);
  OnlineStream u(src, spec);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(t.next().id, u.next().id);
}

TEST(Parity, OnlineMatchesOfflineWithoutFilters) {
  const auto src = small_source(8);
  auto off = offline(25, 0.0, 0.0);
  off.output_dir = scratch("off");
  PipelineSpec on;
  on.mode = Mode::kOnline;
  on.count = 25;
  on.filters.rejection_rate = 0.0;
  on.filters.uncertainty_fraction = 0.0;
  on.output_dir = scratch("on");
  const auto a = synth_offline(src, off).manifest;
  const auto b = synth_online(src, on);
  EXPECT_EQ(a.entries, b.entries);
  for (const auto& e : a.entries) {
    EXPECT_EQ(slurp(off.output_dir / e.image_path), slurp(on.output_dir / e.image_path));
    EXPECT_EQ(slurp(off.output_dir / e.mask_path), slurp(on.output_dir / e.mask_path));
  }
  fs::remove_all(off.output_dir);
  fs::remove_all(on.output_dir);
}

TEST(FilterOrder, GlobalStagesCommuteOnDistinctScores) {
  // Each stage ranks the full pool; the kept set is what survives both.
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u;
  for (int t = 0; t < 200; ++t) {
    std::vector<sampling::ScoredId> conf, unc;
    for (int i = 0; i < 50 + t; ++i) {
      const std::string id = sample_id(static_cast<std::uint64_t>(i));
      conf.push_back({id, u(gen)});
      unc.push_back({id, u(gen)});
    }
    auto keep = [](std::span<const sampling::ScoredId> s, const std::vector<std::size_t>& idx) {
      std::set<std::string> out;
      for (auto i : idx) out.insert(s[i].id);
      return out;
    };
    const auto r = keep(conf, sampling::confidence_rejection(conf, 0.9));
    const auto q = keep(unc, sampling::uncertainty_filter(unc, 0.1));
    std::set<std::string> rq, qr;
    std::set_intersection(r.begin(), r.end(), q.begin(), q.end(), std::inserter(rq, rq.end()));
    std::set_intersection(q.begin(), q.end(), r.begin(), r.end(), std::inserter(qr, qr.end()));
    ASSERT_EQ(rq, qr);
  }
}

TEST(SynthOnline, RecordsThresholdAndCandidates) {
  const auto src = small_source(10);
  PipelineSpec spec;
  spec.mode = Mode::kOnline;
  spec.count = 30;
  spec.filters.uncertainty_fraction = 0.0;
  const auto m = synth_online(src, spec);
  EXPECT_EQ(m.entries.size(), 30u);
  EXPECT_TRUE(m.metadata_value("confidence_threshold"));
  EXPECT_GE(std::stoull(*m.metadata_value("candidates")), 30u);
  EXPECT_EQ(m.metadata_value("mode"), "online");
}
