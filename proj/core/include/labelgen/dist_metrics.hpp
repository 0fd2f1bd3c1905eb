#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "labelgen/types.hpp"

namespace labelgen::metrics {

/// Blackens every pixel whose label is background or ignore.
Image apply_mask(const Image& image, const Mask& mask);

struct GaussianFit {
  std::size_t dim = 0;
  std::vector<double> mean;
  /// dim x dim, row-major, symmetrized.
  std::vector<double> cov;

  double cov_at(std::size_t i, std::size_t j) const { return cov[i * dim + j]; }
};

/// Sample mean and unbiased (n-1) covariance.
GaussianFit fit_gaussian(const EmbeddingSet& set);

/// Eigenvalues of the sandwich product below this are rejected as non-PSD;
/// those in [-tol, 0] are clamped.
inline constexpr double kPsdTolerance = 1e-6;

/// Frechet distance between two Gaussian fits.
double frechet_distance(const GaussianFit& a, const GaussianFit& b);
double fid(const EmbeddingSet& a, const EmbeddingSet& b);

/// (x.y / d + 1)^3
double polynomial_kernel(std::span<const double> x, std::span<const double> y) noexcept;

/// Unbiased squared MMD with the cubic polynomial kernel over the full sets.
double kid(const EmbeddingSet& a, const EmbeddingSet& b);

/// Mean of the unbiased estimator over consecutive blocks of `block_size`
/// rows taken from both sets (floor(min(na, nb) / block_size) blocks).
double kid_blocked(const EmbeddingSet& a, const EmbeddingSet& b, std::size_t block_size);

}  // namespace labelgen::metrics
