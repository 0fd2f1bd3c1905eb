#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "labelgen/error.hpp"
#include "labelgen/geometry.hpp"
#include "labelgen/sampling.hpp"
#include "labelgen/toy_generator.hpp"
#include "oracles.hpp"

using namespace labelgen;
using namespace labelgen::toy;

namespace {

std::vector<double> random_z(std::mt19937_64& gen) {
  std::normal_distribution<double> n;
  std::vector<double> z(kLatentDim);
  for (auto& v : z) v = std::clamp(n(gen), -0.9, 0.9);
  return z;
}

/// Band membership by brute force over the Chebyshev neighbourhood.
std::vector<std::size_t> band_oracle(const Mask& m, int r) {
  std::vector<std::size_t> out;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      bool hit = false;
      for (int yy = std::max(0, y - r); yy <= std::min(m.height() - 1, y + r); ++yy) {
        for (int xx = std::max(0, x - r); xx <= std::min(m.width() - 1, x + r); ++xx) {
          hit = hit || ((m.at(xx, yy) != 0) != (m.at(x, y) != 0));
        }
      }
      if (hit) out.push_back(static_cast<std::size_t>(y) * m.width() + x);
    }
  }
  return out;
}

}  // namespace

TEST(ToyTaxonomy, FamiliesCycle) {
  const auto four = toy_taxonomy(4, 1);
  ASSERT_EQ(four.specs.size(), 4u);
  std::set<ShapeFamily> fams;
  for (const auto& s : four.specs) fams.insert(s.family);
  EXPECT_EQ(fams.size(), 4u);

  const auto sixteen = toy_taxonomy(16, 1);
  std::map<ShapeFamily, int> per;
  for (const auto& s : sixteen.specs) ++per[s.family];
  for (const auto& [f, n] : per) EXPECT_EQ(n, 4) << to_string(f);
  EXPECT_EQ(sixteen.taxonomy.classes.at(1), "ellipse-1");
  EXPECT_EQ(sixteen.taxonomy.groups.at("family").at(6), 2);
  EXPECT_EQ(sixteen.taxonomy.groups.at("FG/BG").size(), 16u);

  EXPECT_THROW(toy_taxonomy(3, 1), Error);
}

TEST(ToyTaxonomy, DeterministicAndValid) {
  const auto a = toy_taxonomy(40, 77);
  const auto b = toy_taxonomy(40, 77);
  EXPECT_EQ(a.taxonomy, b.taxonomy);
  ASSERT_EQ(a.specs.size(), b.specs.size());
  for (std::size_t i = 0; i < a.specs.size(); ++i) {
    EXPECT_EQ(a.specs[i].size.lo, b.specs[i].size.lo);
    EXPECT_EQ(a.specs[i].color_hi, b.specs[i].color_hi);
    EXPECT_NO_THROW(a.specs[i].validate());
    EXPECT_GT(a.specs[i].size.lo, 0.0);
    EXPECT_LE(a.specs[i].size.hi, 0.9);
  }
  EXPECT_NE(toy_taxonomy(40, 78).specs[0].size.lo, a.specs[0].size.lo);
}

TEST(ToyGenerate, ZeroDisagreementGivesOneHotHeads) {
  const auto tax = toy_taxonomy(8, 2);
  std::mt19937_64 gen(3);
  ToyOptions opt;
  opt.disagreement = 0.0;
  for (const auto& spec : tax.specs) {
    const auto out = toy_generate(spec, random_z(gen), gen(), 64, opt);
    ASSERT_TRUE(out.ensemble);
    EXPECT_EQ(out.ensemble->heads(), kEnsembleHeads);
    for (int h = 0; h < kEnsembleHeads; ++h) {
      for (int y = 0; y < 64; ++y) {
        for (int x = 0; x < 64; ++x) {
          const auto p = out.ensemble->pixel(h, x, y);
          const int gt = out.gt_mask.at(x, y) != 0 ? 1 : 0;
          ASSERT_EQ(p[gt], 1.0);
          ASSERT_EQ(p[1 - gt], 0.0);
        }
      }
    }
    EXPECT_EQ(sampling::sample_uncertainty(*out.ensemble), 0.0);
  }
}

TEST(ToyGenerate, Deterministic) {
  const auto tax = toy_taxonomy(4, 4);
  std::mt19937_64 gen(5);
  for (const auto& spec : tax.specs) {
    const auto z = random_z(gen);
    const auto seed = gen();
    for (int res : {64, 128}) {
      const auto a = toy_generate(spec, z, seed, res);
      const auto b = toy_generate(spec, z, seed, res);
      EXPECT_EQ(a.image, b.image);
      EXPECT_EQ(a.gt_mask, b.gt_mask);
      EXPECT_EQ(a.ensemble->values().size(), b.ensemble->values().size());
      EXPECT_TRUE(std::equal(a.ensemble->values().begin(), a.ensemble->values().end(),
                             b.ensemble->values().begin()));
      EXPECT_EQ(a.confidence, b.confidence);
      EXPECT_EQ(a.disagreement, b.disagreement);
    }
  }
}

TEST(ToyGenerate, RejectsBadInput) {
  const auto spec = toy_taxonomy(4, 1).specs[0];
  const std::vector<double> z(kLatentDim, 0.0);
  EXPECT_THROW(toy_generate(spec, z, 1, 100), Error);
  EXPECT_THROW(toy_generate(spec, z, 1, 512), Error);
  std::vector<double> bad = z;
  bad[3] = std::nan("");
  EXPECT_THROW(toy_generate(spec, bad, 1, 64), Error);
}

TEST(ToyGenerate, UncertaintyIncreasesWithDisagreement) {
  const auto tax = toy_taxonomy(16, 6);
  std::vector<double> means;
  for (double d : {0.0, 0.25, 0.5, 0.75}) {
    std::mt19937_64 gen(7);
    ToyOptions opt;
    opt.disagreement = d;
    double sum = 0.0;
    for (int s = 0; s < 100; ++s) {
      const auto& spec = tax.specs[s % tax.specs.size()];
      const auto out = toy_generate(spec, random_z(gen), gen(), 64, opt);
      sum += sampling::sample_uncertainty(*out.ensemble);
    }
    means.push_back(sum / 100.0);
  }
  for (std::size_t i = 1; i < means.size(); ++i) EXPECT_GT(means[i], means[i - 1]) << i;
}

TEST(ToyGenerate, UncertaintyRankingTracksDisagreement) {
  const auto tax = toy_taxonomy(16, 8);
  std::mt19937_64 gen(9);
  std::vector<double> unc, dis;
  for (int s = 0; s < 200; ++s) {
    const auto& spec = tax.specs[s % tax.specs.size()];
    const auto out = toy_generate(spec, random_z(gen), gen(), 64);
    unc.push_back(sampling::sample_uncertainty(*out.ensemble));
    dis.push_back(out.disagreement);
  }
  EXPECT_GT(oracle::spearman(unc, dis), 0.95);
}

TEST(ToyGenerate, ConfidenceDecreasesWithDisagreement) {
  const auto spec = toy_taxonomy(4, 10).specs[1];
  const std::vector<double> z(kLatentDim, 0.0);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    double prev = 2.0;
    for (double d : {0.0, 0.3, 0.6, 0.9}) {
      ToyOptions opt;
      opt.disagreement = d;
      opt.with_ensemble = false;
      const auto out = toy_generate(spec, z, seed, 64, opt);
      EXPECT_FALSE(out.ensemble);
      EXPECT_GE(out.confidence, 0.0);
      EXPECT_LE(out.confidence, 1.0);
      EXPECT_LE(out.confidence, prev);
      prev = out.confidence;
    }
  }
}

TEST(ToyGenerate, FlipsOnlyInsideBoundaryBand) {
  const auto tax = toy_taxonomy(4, 11);
  std::mt19937_64 gen(12);
  ToyOptions opt;
  opt.disagreement = 0.8;
  for (const auto& spec : tax.specs) {
    const auto out = toy_generate(spec, random_z(gen), gen(), 64, opt);
    const auto band = band_oracle(out.gt_mask, kBandRadius);
    EXPECT_EQ(boundary_band(out.gt_mask), band);
    const std::set<std::size_t> in_band(band.begin(), band.end());
    for (int h = 0; h < kEnsembleHeads; ++h) {
      for (int y = 0; y < 64; ++y) {
        for (int x = 0; x < 64; ++x) {
          const auto p = out.ensemble->pixel(h, x, y);
          if (p[0] != 0.0 && p[1] != 0.0) {
            ASSERT_TRUE(in_band.contains(static_cast<std::size_t>(y) * 64 + x));
            ASSERT_NEAR(std::max(p[0], p[1]), 1.0 - 0.8 + 0.4, 1e-12);
          }
        }
      }
    }
    EXPECT_NO_THROW(out.ensemble->validate());
  }
}

TEST(ToyGenerate, AreaMatchesClosedForm) {
  const auto tax = toy_taxonomy(8, 13);
  std::mt19937_64 gen(14);
  for (const auto& spec : tax.specs) {
    if (spec.family != ShapeFamily::kEllipse && spec.family != ShapeFamily::kRectangle) continue;
    for (int res : {64, 128, 256}) {
      for (int t = 0; t < 10; ++t) {
        const auto z = random_z(gen);
        ToyOptions opt;
        opt.with_ensemble = false;
        const auto out = toy_generate(spec, z, gen(), res, opt);
        const double semi = 0.5 * spec.size.at(latent_unit(z[0]));
        const double minor = semi * spec.aspect.at(latent_unit(z[1]));
        const double want = spec.family == ShapeFamily::kEllipse ? std::numbers::pi * semi * minor
                                                                 : 4.0 * semi * minor;
        const double mi = geometry::mask_stats(out.gt_mask).mask_over_image;
        EXPECT_NEAR(mi / want, 1.0, 0.05) << to_string(spec.family) << " res " << res;
      }
    }
  }
}

TEST(ToyGenerate, LatentUnitAffine) {
  EXPECT_EQ(latent_unit(-3.0), 0.0);
  EXPECT_EQ(latent_unit(0.0), 0.5);
  EXPECT_EQ(latent_unit(3.0), 1.0);
  EXPECT_EQ(latent_unit(10.0), 1.0);
  EXPECT_EQ(latent_unit(-10.0), 0.0);
}
