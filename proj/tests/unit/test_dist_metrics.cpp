#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "labelgen/dist_metrics.hpp"
#include "labelgen/error.hpp"
#include "oracles.hpp"

using namespace labelgen;
using namespace labelgen::metrics;

namespace {

EmbeddingSet from_rows(const std::vector<std::vector<double>>& rows) {
  std::vector<double> v;
  for (const auto& r : rows) v.insert(v.end(), r.begin(), r.end());
  return EmbeddingSet(rows.size(), rows.empty() ? 0 : rows[0].size(), v);
}

std::vector<std::vector<double>> gaussian_rows(std::mt19937_64& gen, std::size_t n, std::size_t d,
                                               double mu = 0.0, double sigma = 1.0) {
  std::normal_distribution<double> nd(mu, sigma);
  std::vector<std::vector<double>> rows(n, std::vector<double>(d));
  for (auto& r : rows) {
    for (auto& x : r) x = nd(gen);
  }
  return rows;
}

}  // namespace

TEST(ApplyMask, TrivialMasks) {
  std::mt19937_64 gen(1);
  Image img(6, 4);
  for (auto& b : img.data()) b = static_cast<std::uint8_t>(gen());
  EXPECT_EQ(apply_mask(img, Mask(6, 4, 3)), img);
  const auto black = apply_mask(img, Mask(6, 4));
  for (auto b : black.data()) EXPECT_EQ(b, 0);
}

TEST(ApplyMask, CheckerboardMatchesPixelLoop) {
  std::mt19937_64 gen(2);
  Image img(9, 7);
  for (auto& b : img.data()) b = static_cast<std::uint8_t>(gen());
  Mask m(9, 7);
  for (int y = 0; y < 7; ++y) {
    for (int x = 0; x < 9; ++x) {
      const int k = (x + y) % 3;
      m.set(x, y, k == 0 ? 0 : (k == 1 ? 5 : kIgnoreLabel));
    }
  }
  const auto out = apply_mask(img, m);
  for (int y = 0; y < 7; ++y) {
    for (int x = 0; x < 9; ++x) {
      const bool keep = (x + y) % 3 == 1;
      for (int c = 0; c < 3; ++c) {
        EXPECT_EQ(out.pixel(x, y)[c], keep ? img.pixel(x, y)[c] : 0) << x << "," << y;
      }
    }
  }
  EXPECT_THROW(apply_mask(img, Mask(9, 8)), Error);
}

TEST(FitGaussian, Examples) {
  const auto constant = fit_gaussian(from_rows({{1.5, -2}, {1.5, -2}, {1.5, -2}}));
  EXPECT_EQ(constant.mean, (std::vector<double>{1.5, -2}));
  for (double c : constant.cov) EXPECT_EQ(c, 0.0);

  const auto two = fit_gaussian(from_rows({{0}, {2}}));
  EXPECT_DOUBLE_EQ(two.mean[0], 1.0);
  EXPECT_DOUBLE_EQ(two.cov[0], 2.0);

  EXPECT_THROW(fit_gaussian(from_rows({{1, 2}})), Error);
}

TEST(FitGaussian, MatchesTwoPassOracle) {
  std::mt19937_64 gen(3);
  for (int t = 0; t < 50; ++t) {
    const auto rows = gaussian_rows(gen, 5 + t, 2 + t % 4, 0.5, 2.0);
    const auto fit = fit_gaussian(from_rows(rows));
    const auto [mean, cov] = oracle::two_pass_moments(rows);
    for (std::size_t i = 0; i < mean.size(); ++i) ASSERT_NEAR(fit.mean[i], mean[i], 1e-12);
    for (std::size_t i = 0; i < cov.size(); ++i) ASSERT_NEAR(fit.cov[i], cov[i], 1e-12);
    for (std::size_t i = 0; i < fit.dim; ++i) {
      ASSERT_GE(fit.cov_at(i, i), 0.0);
      for (std::size_t j = 0; j < fit.dim; ++j) ASSERT_NEAR(fit.cov_at(i, j), fit.cov_at(j, i), 1e-9);
    }
  }
}

TEST(Fid, Examples) {
  std::mt19937_64 gen(4);
  const auto a = from_rows(gaussian_rows(gen, 50, 4));
  EXPECT_NEAR(fid(a, a), 0.0, 1e-6);

  // 1-D moments (0,1) vs (1,1).
  const auto u = from_rows({{-1}, {1}, {-1}, {1}});  // mean 0, var 4/3
  const auto v = from_rows({{0}, {2}, {0}, {2}});
  EXPECT_NEAR(fid(u, v), 1.0, 1e-12);

  EXPECT_THROW(fid(a, from_rows({{1, 2, 3}, {4, 5, 6}})), Error);
}

TEST(Fid, DiagonalClosedForm) {
  std::mt19937_64 gen(5);
  for (int t = 0; t < 20; ++t) {
    const std::size_t d = 1 + t % 5;
    GaussianFit a, b;
    a.dim = b.dim = d;
    a.cov.assign(d * d, 0.0);
    b.cov.assign(d * d, 0.0);
    std::vector<double> va(d), vb(d);
    std::uniform_real_distribution<double> u(0.1, 3.0);
    for (std::size_t i = 0; i < d; ++i) {
      a.mean.push_back(u(gen));
      b.mean.push_back(-u(gen));
      va[i] = u(gen);
      vb[i] = u(gen);
      a.cov[i * d + i] = va[i];
      b.cov[i * d + i] = vb[i];
    }
    EXPECT_NEAR(frechet_distance(a, b), oracle::diagonal_fid(a.mean, va, b.mean, vb), 1e-9);
  }
}

TEST(Fid, NonPsdRejected) {
  GaussianFit a, b;
  a.dim = b.dim = 2;
  a.mean = b.mean = {0, 0};
  a.cov = {1, 0, 0, 1};
  b.cov = {1, 0, 0, -1};
  try {
    frechet_distance(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNotPositiveSemidefinite);
  }
}

TEST(Fid, SymmetricAndRotationInvariant) {
  std::mt19937_64 gen(6);
  const auto ra = gaussian_rows(gen, 80, 3, 0.0, 1.0);
  auto rb = gaussian_rows(gen, 60, 3, 0.3, 1.5);
  for (auto& r : rb) r[1] += 0.7 * r[0];
  const auto a = from_rows(ra), b = from_rows(rb);
  const double f = fid(a, b);
  EXPECT_NEAR(f, fid(b, a), 1e-6);

  // Rotation about z by 0.7 rad, then about x by 0.3 rad.
  const double c1 = std::cos(0.7), s1 = std::sin(0.7), c2 = std::cos(0.3), s2 = std::sin(0.3);
  auto rotate = [&](std::vector<std::vector<double>> rows) {
    for (auto& r : rows) {
      const double x = c1 * r[0] - s1 * r[1], y = s1 * r[0] + c1 * r[1], z = r[2];
      r = {x, c2 * y - s2 * z, s2 * y + c2 * z};
    }
    return from_rows(rows);
  };
  EXPECT_NEAR(fid(rotate(ra), rotate(rb)), f, 1e-6);
}

TEST(Fid, DecreasesWithSampleSize) {
  std::mt19937_64 gen(7);
  double prev = INFINITY;
  for (std::size_t n : {10, 100, 1000}) {
    double avg = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      avg += fid(from_rows(gaussian_rows(gen, n, 3)), from_rows(gaussian_rows(gen, n, 3)));
    }
    avg /= 20.0;
    EXPECT_LT(avg, prev) << n;
    prev = avg;
  }
}

TEST(Kid, Examples) {
  const auto same = from_rows({{0.3, -1}, {0.3, -1}, {0.3, -1}});
  EXPECT_EQ(kid(same, same), 0.0);

  const std::vector<std::vector<double>> a{{0.1, 0.2}, {-0.5, 1.0}, {2.0, 0.0}};
  const std::vector<std::vector<double>> b{{1.0, 1.0}, {0.0, -0.3}, {0.7, 0.4}};
  EXPECT_NEAR(kid(from_rows(a), from_rows(b)), oracle::triple_loop_kid(a, b), 1e-12);
  EXPECT_DOUBLE_EQ(polynomial_kernel(a[0], b[0]), std::pow(0.3 / 2.0 + 1.0, 3));
  EXPECT_THROW(kid(from_rows(a), from_rows({{1}, {2}})), Error);
}

TEST(Kid, MatchesOracleAndSymmetric) {
  std::mt19937_64 gen(8);
  for (int t = 0; t < 30; ++t) {
    const auto a = gaussian_rows(gen, 3 + t % 7, 1 + t % 6);
    const auto b = gaussian_rows(gen, 2 + t % 9, 1 + t % 6, 0.4);
    const double k = kid(from_rows(a), from_rows(b));
    ASSERT_NEAR(k, oracle::triple_loop_kid(a, b), 1e-9 * std::max(1.0, std::abs(k)));
    ASSERT_EQ(k, kid(from_rows(b), from_rows(a)));
  }
}

TEST(Kid, UnbiasedOnOneDistribution) {
  std::mt19937_64 gen(9);
  const int trials = 400;
  std::vector<double> vals;
  for (int t = 0; t < trials; ++t) {
    vals.push_back(kid(from_rows(gaussian_rows(gen, 20, 1)), from_rows(gaussian_rows(gen, 20, 1))));
  }
  double mean = 0.0;
  for (double v : vals) mean += v;
  mean /= trials;
  double var = 0.0;
  for (double v : vals) var += (v - mean) * (v - mean);
  const double se = std::sqrt(var / (trials - 1) / trials);
  EXPECT_LT(std::abs(mean), 3.0 * se);
}

TEST(Kid, BlockedAveragesBlocks) {
  std::mt19937_64 gen(10);
  const auto a = gaussian_rows(gen, 25, 2);
  const auto b = gaussian_rows(gen, 21, 2, 0.5);
  double want = 0.0;
  for (int blk = 0; blk < 2; ++blk) {
    std::vector<std::vector<double>> sa(a.begin() + blk * 10, a.begin() + blk * 10 + 10);
    std::vector<std::vector<double>> sb(b.begin() + blk * 10, b.begin() + blk * 10 + 10);
    want += oracle::triple_loop_kid(sa, sb);
  }
  EXPECT_NEAR(kid_blocked(from_rows(a), from_rows(b), 10), want / 2.0, 1e-12);
  EXPECT_THROW(kid_blocked(from_rows(a), from_rows(b), 30), Error);
}
