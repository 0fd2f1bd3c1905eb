#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "labelgen/error.hpp"
#include "labelgen/rng.hpp"
#include "labelgen/sampling.hpp"
#include "oracles.hpp"

using namespace labelgen;
using namespace labelgen::sampling;

namespace {

std::vector<ScoredId> scored(const std::vector<double>& scores) {
  std::vector<ScoredId> out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out.push_back({"s" + std::to_string(100 + i), scores[i]});
  }
  return out;
}

std::set<std::string> ids_of(std::span<const ScoredId> s, const std::vector<std::size_t>& idx) {
  std::set<std::string> out;
  for (auto i : idx) out.insert(s[i].id);
  return out;
}

std::vector<std::pair<std::string, double>> pairs_of(std::span<const ScoredId> s) {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& x : s) out.emplace_back(x.id, x.score);
  return out;
}

double sample_variance(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= double(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / double(v.size() - 1);
}

/// Chi-square goodness of fit p-value of `counts` against `probs`.
double chi_square_p(const std::vector<std::size_t>& counts, const std::vector<double>& probs,
                    std::size_t n) {
  double stat = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double e = probs[i] * double(n);
    stat += (double(counts[i]) - e) * (double(counts[i]) - e) / e;
  }
  const boost::math::chi_squared dist(double(probs.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

}  // namespace

TEST(FilterConfig, DefaultsAndValidation) {
  const FilterConfig c;
  EXPECT_EQ(c.truncation_psi, 0.9);
  EXPECT_EQ(c.rejection_rate, 0.9);
  EXPECT_EQ(c.nucleus_p, 0.92);
  EXPECT_EQ(c.top_k, 200);
  EXPECT_EQ(c.uncertainty_fraction, 0.10);
  EXPECT_NO_THROW(c.validate());

  auto bad = c;
  bad.truncation_psi = 0;
  EXPECT_THROW(bad.validate(), Error);
  bad = c;
  bad.rejection_rate = 1.0;
  EXPECT_THROW(bad.validate(), Error);
  bad = c;
  bad.nucleus_p = 0.0;
  EXPECT_THROW(bad.validate(), Error);
  bad = c;
  bad.top_k = 0;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(FilterConfig, TextRoundTrip) {
  FilterConfig c;
  c.truncation_psi = 0.5;
  c.top_k = 17;
  c.uncertainty_fraction = 0.0;
  EXPECT_EQ(parse_filter_config(format_filter_config(c)), c);
  const auto parsed = parse_filter_config("# comment\nrejection_rate = 0.5\n\n");
  EXPECT_EQ(parsed.rejection_rate, 0.5);
  EXPECT_EQ(parsed.nucleus_p, 0.92);
  EXPECT_THROW(parse_filter_config("bogus=1\n"), Error);
  EXPECT_THROW(parse_filter_config("top_k\n"), Error);
}

TEST(TruncatedNormal, RespectsBoundAndSeed) {
  Rng a(11), b(11);
  for (int i = 0; i < 1000; ++i) {
    const auto z = truncated_normal(8, 0.9, a);
    ASSERT_EQ(z, truncated_normal(8, 0.9, b));
    for (double v : z) ASSERT_LE(std::abs(v), 0.9);
  }
}

TEST(TruncatedNormal, VarianceMatchesIntegral) {
  Rng rng(12);
  const auto wide = truncated_normal(100000, 8.0, rng);
  EXPECT_NEAR(sample_variance(wide), 1.0, 0.02);
  const auto narrow = truncated_normal(100000, 0.9, rng);
  const double want = oracle::truncated_normal_variance(0.9);
  EXPECT_NEAR(want, 0.242, 0.001);
  EXPECT_NEAR(sample_variance(narrow), want, 0.01);
}

TEST(Nucleus, OneHot) {
  const CategoricalDist d({0, 0, 1, 0});
  Rng rng(13);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(nucleus_topk_sample(d, 0.92, 200, rng), 2u);
}

TEST(Nucleus, SupportExamples) {
  const CategoricalDist d({0.5, 0.3, 0.15, 0.05});
  const auto s = nucleus_topk_support(d, 0.92, 200);
  EXPECT_EQ(s.indices, (std::vector<std::size_t>{0, 1, 2}));
  ASSERT_EQ(s.probs.size(), 3u);
  EXPECT_NEAR(s.probs[0], 10.0 / 19, 1e-12);
  EXPECT_NEAR(s.probs[1], 6.0 / 19, 1e-12);
  EXPECT_NEAR(s.probs[2], 3.0 / 19, 1e-12);

  const auto k2 = nucleus_topk_support(d, 0.92, 2);
  EXPECT_EQ(k2.indices, (std::vector<std::size_t>{0, 1}));
  EXPECT_NEAR(k2.probs[0], 0.625, 1e-12);
  EXPECT_NEAR(k2.probs[1], 0.375, 1e-12);
}

TEST(Nucleus, MatchesPrefixOracleOnRandomDists) {
  std::mt19937_64 gen(14);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> p(2 + t % 30);
    double s = 0.0;
    for (auto& x : p) s += (x = std::floor(u(gen) * 8.0));  // coarse values force ties
    if (s == 0.0) continue;
    for (auto& x : p) x /= s;
    const double mass = 0.3 + 0.7 * u(gen);
    const std::size_t k = 1 + t % 10;
    const auto got = nucleus_topk_support(CategoricalDist(p), mass, k);
    const auto [idx, q] = oracle::nucleus_prefix(p, mass, k);
    ASSERT_EQ(got.indices, idx);
    for (std::size_t i = 0; i < q.size(); ++i) ASSERT_NEAR(got.probs[i], q[i], 1e-12);
  }
}

TEST(Nucleus, EmpiricalFrequenciesPassChiSquare) {
  const CategoricalDist d({0.5, 0.3, 0.15, 0.05});
  const std::vector<double> want{10.0 / 19, 6.0 / 19, 3.0 / 19};
  Rng rng(15);
  const std::size_t n = 100000;
  std::vector<std::size_t> counts(3, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto idx = nucleus_topk_sample(d, 0.92, 200, rng);
    ASSERT_LT(idx, 3u);
    ++counts[idx];
  }
  for (std::size_t i = 0; i < 3; ++i) {
    const double sigma = std::sqrt(double(n) * want[i] * (1 - want[i]));
    EXPECT_LT(std::abs(double(counts[i]) - double(n) * want[i]), 3 * sigma);
  }
  EXPECT_GT(chi_square_p(counts, want, n), 0.001);
}

TEST(Nucleus, ReproducibleGivenSeed) {
  const CategoricalDist d({0.1, 0.2, 0.3, 0.4});
  Rng a(16), b(16);
  for (int i = 0; i < 200; ++i) EXPECT_EQ(nucleus_topk_sample(d, 0.9, 3, a), nucleus_topk_sample(d, 0.9, 3, b));
}

TEST(CategoricalDist, RejectsInvalid) {
  EXPECT_THROW(CategoricalDist({0.5, 0.4}), Error);
  EXPECT_THROW(CategoricalDist({1.5, -0.5}), Error);
}

TEST(JsDivergence, Examples) {
  const CategoricalDist a({0.2, 0.8});
  EXPECT_EQ(js_divergence(std::vector<CategoricalDist>{a, a}), 0.0);
  EXPECT_EQ(js_divergence(std::vector<CategoricalDist>(16, a)), 0.0);
  const std::vector<CategoricalDist> opposite{CategoricalDist({1, 0}), CategoricalDist({0, 1})};
  EXPECT_NEAR(js_divergence(opposite), std::numbers::ln2, 1e-12);
  EXPECT_THROW(js_divergence(std::vector<CategoricalDist>{a, CategoricalDist({1, 0, 0})}), Error);
  EXPECT_THROW(js_divergence(std::vector<CategoricalDist>{a}), Error);
}

TEST(JsDivergence, BoundedAndZeroOnlyWhenEqual) {
  std::mt19937_64 gen(17);
  std::gamma_distribution<double> g(0.5, 1.0);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 2 + t % 15, c = 2 + t % 6;
    std::vector<CategoricalDist> ds;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> p(c);
      double s = 0.0;
      for (auto& x : p) s += (x = g(gen) + 1e-3);
      for (auto& x : p) x /= s;
      ds.emplace_back(p);
    }
    const double js = js_divergence(ds);
    ASSERT_GE(js, 0.0);
    ASSERT_LE(js, std::log(double(n)) + 1e-12);
    ASSERT_GT(js, 1e-12);
    ASSERT_LE(js_divergence(std::vector<CategoricalDist>(n, ds[0])), 1e-12);
  }
}

TEST(SampleUncertainty, Examples) {
  // 2 heads, 2x2 image, 3 classes, identical heads.
  std::vector<double> same;
  for (int h = 0; h < 2; ++h) {
    for (int p = 0; p < 4; ++p) same.insert(same.end(), {0.2, 0.3, 0.5});
  }
  EXPECT_EQ(sample_uncertainty(EnsemblePrediction(2, 2, 2, 3, same)), 0.0);
  EXPECT_NEAR(sample_uncertainty(EnsemblePrediction(2, 1, 1, 2, {1, 0, 0, 1})), std::numbers::ln2, 1e-12);
  // One disagreeing pixel out of four.
  EXPECT_NEAR(sample_uncertainty(EnsemblePrediction(2, 2, 2, 2, {1, 0, 1, 0, 1, 0, 1, 0,  //
                                                                  0, 1, 1, 0, 1, 0, 1, 0})),
              std::numbers::ln2 / 4, 1e-12);
  EXPECT_THROW(EnsemblePrediction(2, 1, 1, 2, {0.7, 0.7, 0, 1}).validate(), Error);
}

TEST(SampleUncertainty, MixtureHeadRespectsBound) {
  std::vector<double> p{1, 0, 0, 1};
  const double two = sample_uncertainty(EnsemblePrediction(2, 1, 1, 2, p));
  p.insert(p.end(), {0.5, 0.5});
  const double three = sample_uncertainty(EnsemblePrediction(3, 1, 1, 2, p));
  EXPECT_LE(three, std::log(3.0));
  EXPECT_LE(three, two + 1e-12);
}

TEST(Entropy, ZeroLogZero) {
  EXPECT_EQ(entropy(std::vector<double>{1.0, 0.0}), 0.0);
  EXPECT_NEAR(entropy(std::vector<double>{0.25, 0.25, 0.25, 0.25}), std::log(4.0), 1e-15);
}

TEST(CeilCount, Slack) {
  EXPECT_EQ(ceil_count(0.1 * 20), 2u);
  EXPECT_EQ(ceil_count(0.0), 0u);
  EXPECT_EQ(ceil_count(0.1), 1u);
  EXPECT_EQ(ceil_count((1.0 - 0.9) * 10), 1u);
}

TEST(UncertaintyFilter, Examples) {
  const auto s = scored({0.3, 0.1, 0.9, 0.4, 0.2, 0.5, 0.6, 0.7, 0.8, 0.05});
  EXPECT_EQ(uncertainty_filter(s, 0.0).size(), 10u);
  const auto kept = uncertainty_filter(s, 0.10);
  EXPECT_EQ(kept, (std::vector<std::size_t>{0, 1, 3, 4, 5, 6, 7, 8, 9}));

  const auto tied = scored({0.9, 0.1, 0.9, 0.4, 0.2, 0.9, 0.6, 0.7, 0.8, 0.05});
  const auto kt = uncertainty_filter(tied, 0.10);
  EXPECT_EQ(kt, (std::vector<std::size_t>{0, 1, 2, 3, 4, 6, 7, 8, 9}));  // s105 dropped
}

TEST(ConfidenceRejection, Examples) {
  const auto s = scored({0.3, 0.1, 0.9, 0.4, 0.2, 0.5, 0.6, 0.7, 0.8, 0.05});
  EXPECT_EQ(confidence_rejection(s, 0.0).size(), 10u);
  EXPECT_EQ(confidence_rejection(s, 0.9), (std::vector<std::size_t>{2}));

  std::mt19937_64 gen(18);
  std::uniform_real_distribution<double> u;
  std::vector<double> v(20);
  for (auto& x : v) x = u(gen);
  const auto s20 = scored(v);
  const auto kept = confidence_rejection(s20, 0.9);
  EXPECT_EQ(kept.size(), 2u);
  EXPECT_EQ(ids_of(s20, kept), oracle::sort_rejection(pairs_of(s20), 0.9));
}

TEST(Filters, MatchSortOracleWithTiesAndPreserveOrder) {
  std::mt19937_64 gen(19);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> v(1 + t % 60);
    for (auto& x : v) x = double(gen() % 7) / 7.0;  // many ties
    auto s = scored(v);
    std::shuffle(s.begin(), s.end(), gen);
    const double rate = double(t % 10) / 10.0;
    const auto kr = confidence_rejection(s, rate);
    const auto ku = uncertainty_filter(s, rate);
    ASSERT_TRUE(std::is_sorted(kr.begin(), kr.end()));
    ASSERT_TRUE(std::is_sorted(ku.begin(), ku.end()));
    ASSERT_EQ(ids_of(s, kr), oracle::sort_rejection(pairs_of(s), rate));
    ASSERT_EQ(ids_of(s, ku), oracle::sort_uncertainty(pairs_of(s), rate));
  }
}

TEST(Filters, MonotoneInRate) {
  std::mt19937_64 gen(20);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> v(50);
    for (auto& x : v) x = double(gen() % 11);
    const auto s = scored(v);
    std::set<std::string> prev_r = ids_of(s, confidence_rejection(s, 0.0));
    std::set<std::string> prev_u = ids_of(s, uncertainty_filter(s, 0.0));
    for (int r = 1; r < 10; ++r) {
      const auto cur_r = ids_of(s, confidence_rejection(s, r / 10.0));
      const auto cur_u = ids_of(s, uncertainty_filter(s, r / 10.0));
      ASSERT_TRUE(std::includes(prev_r.begin(), prev_r.end(), cur_r.begin(), cur_r.end()));
      ASSERT_TRUE(std::includes(prev_u.begin(), prev_u.end(), cur_u.begin(), cur_u.end()));
      prev_r = cur_r;
      prev_u = cur_u;
    }
  }
}

TEST(Filters, SampleWrappers) {
  std::vector<LabeledSample> samples(4);
  for (int i = 0; i < 4; ++i) {
    samples[i].id = "x" + std::to_string(i);
    samples[i].confidence = 0.1 * i;
    samples[i].uncertainty = 0.1 * (3 - i);
  }
  const auto kept = confidence_rejection(samples, 0.5);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].id, "x2");
  EXPECT_EQ(kept[1].id, "x3");
  const auto ku = uncertainty_filter(samples, 0.25);
  ASSERT_EQ(ku.size(), 3u);
  EXPECT_EQ(ku[0].id, "x1");
  samples[1].confidence.reset();
  EXPECT_THROW(confidence_rejection(samples, 0.5), Error);
}
