#include <algorithm>
#include <limits>

#include "labelgen/error.hpp"
#include "labelgen/geometry.hpp"
#include "labelgen/rng.hpp"

namespace labelgen::geometry {

namespace {

double squared_l2(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

int nearest(std::span<const double> p, const std::vector<std::vector<double>>& centroids) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = squared_l2(p, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

std::vector<std::vector<double>> plus_plus_seed(std::span<const std::vector<double>> points, int k,
                                                Rng& rng) {
  const std::size_t n = points.size();
  std::vector<std::vector<double>> centroids;
  std::vector<bool> chosen(n, false);
  std::size_t first = static_cast<std::size_t>(rng.below(n));
  centroids.push_back(points[first]);
  chosen[first] = true;

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_l2(points[i], centroids[0]);

  while (centroids.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (d2[i] > 0.0 && acc > target) {
          pick = i;
          break;
        }
      }
      if (pick == n) {
        for (std::size_t i = n; i-- > 0;) {
          if (d2[i] > 0.0) {
            pick = i;
            break;
          }
        }
      }
    } else {
      // Every point coincides with a centroid: take the lowest unused index.
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) {
          pick = i;
          break;
        }
      }
    }
    chosen[pick] = true;
    centroids.push_back(points[pick]);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_l2(points[i], centroids.back()));
  }
  return centroids;
}

}  // namespace

KMeansResult kmeans(std::span<const std::vector<double>> points, int k, std::uint64_t seed,
                    int max_iterations) {
  const std::size_t n = points.size();
  if (k < 1 || n < static_cast<std::size_t>(k)) {
    throw Error(ErrorKind::kInvalidArgument, "k-means needs at least k points");
  }
  const std::size_t dim = points[0].size();
  for (const auto& p : points) {
    if (p.size() != dim) throw Error(ErrorKind::kDimensionMismatch, "k-means points differ in size");
  }

  Rng rng(seed);
  KMeansResult result;
  result.centroids = plus_plus_seed(points, k, rng);
  std::vector<int> previous;

  for (int iter = 0; iter < max_iterations; ++iter) {
    result.iterations = iter + 1;
    result.assignment.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) result.assignment[i] = nearest(points[i], result.centroids);
    const bool changed = result.assignment != previous;

    std::vector<std::vector<double>> sums(static_cast<std::size_t>(k), std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(result.assignment[i]);
      ++counts[c];
      for (std::size_t j = 0; j < dim; ++j) sums[c][j] += points[i][j];
    }
    std::vector<std::size_t> empties;
    for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
      if (counts[c] == 0) {
        empties.push_back(c);
        continue;
      }
      for (std::size_t j = 0; j < dim; ++j) {
        result.centroids[c][j] = sums[c][j] / static_cast<double>(counts[c]);
      }
    }
    if (!empties.empty()) {
      std::vector<std::pair<double, std::size_t>> spread;
      for (std::size_t i = 0; i < n; ++i) {
        spread.emplace_back(
            squared_l2(points[i], result.centroids[static_cast<std::size_t>(result.assignment[i])]), i);
      }
      std::sort(spread.begin(), spread.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
      });
      for (std::size_t e = 0; e < empties.size(); ++e) {
        result.centroids[empties[e]] = points[spread[e % n].second];
      }
    }
    result.sizes = counts;
    if (!changed) break;
    previous = result.assignment;
  }
  return result;
}

}  // namespace labelgen::geometry
