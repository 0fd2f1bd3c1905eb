#include "labelgen/dist_metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "labelgen/error.hpp"

namespace labelgen::metrics {

namespace {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

Matrix as_matrix(const GaussianFit& fit) {
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      fit.cov.data(), static_cast<Eigen::Index>(fit.dim), static_cast<Eigen::Index>(fit.dim));
}

void require_same_dim(const EmbeddingSet& a, const EmbeddingSet& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorKind::kDimensionMismatch, "embedding dims differ: " + std::to_string(a.dim()) +
                                                   " vs " + std::to_string(b.dim()));
  }
}

/// Symmetric PSD square root; clamps eigenvalues in [-tol, 0].
Matrix psd_sqrt(const Matrix& m, const char* what) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
  Vector values = solver.eigenvalues();
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values[i] < -kPsdTolerance) {
      throw Error(ErrorKind::kNotPositiveSemidefinite,
                  std::string(what) + " has eigenvalue " + std::to_string(values[i]));
    }
    values[i] = std::sqrt(std::max(values[i], 0.0));
  }
  return solver.eigenvectors() * values.asDiagonal() * solver.eigenvectors().transpose();
}

/// Mean of k - shift over pairs; `same` skips the diagonal.
double mean_kernel(const EmbeddingSet& x, std::size_t x0, std::size_t nx, const EmbeddingSet& y,
                   std::size_t y0, std::size_t ny, bool same, double shift) {
  double sum = 0.0;
  for (std::size_t i = 0; i < nx; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < ny; ++j) {
      if (same && i == j) continue;
      row += polynomial_kernel(x.row(x0 + i), y.row(y0 + j)) - shift;
    }
    sum += row;
  }
  const double pairs = same ? static_cast<double>(nx) * static_cast<double>(nx - 1)
                            : static_cast<double>(nx) * static_cast<double>(ny);
  return sum / pairs;
}

struct Block {
  const EmbeddingSet* set;
  std::size_t first;
  std::size_t count;
};

/// Total order on blocks so the cross term is summed the same way for (a,b)
/// and (b,a).
bool block_before(const Block& a, const Block& b) {
  if (a.count != b.count) return a.count < b.count;
  const auto va = a.set->values().subspan(a.first * a.set->dim(), a.count * a.set->dim());
  const auto vb = b.set->values().subspan(b.first * b.set->dim(), b.count * b.set->dim());
  return std::lexicographical_compare(va.begin(), va.end(), vb.begin(), vb.end());
}

double mmd2_unbiased(const EmbeddingSet& a, std::size_t a0, std::size_t na, const EmbeddingSet& b,
                     std::size_t b0, std::size_t nb) {
  Block x{&a, a0, na};
  Block y{&b, b0, nb};
  if (block_before(y, x)) std::swap(x, y);
  // The estimator is invariant to a constant offset; subtracting one kernel
  // value keeps a constant Gram matrix at exactly zero.
  const double shift = polynomial_kernel(x.set->row(x.first), y.set->row(y.first));
  const double xx = mean_kernel(*x.set, x.first, x.count, *x.set, x.first, x.count, true, shift);
  const double yy = mean_kernel(*y.set, y.first, y.count, *y.set, y.first, y.count, true, shift);
  const double xy = mean_kernel(*x.set, x.first, x.count, *y.set, y.first, y.count, false, shift);
  return xx + yy - 2.0 * xy;
}

}  // namespace

Image apply_mask(const Image& image, const Mask& mask) {
  if (image.width() != mask.width() || image.height() != mask.height()) {
    throw Error(ErrorKind::kDimensionMismatch, "image and mask sizes differ");
  }
  Image out = image;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!is_foreground(mask.at(x, y))) out.set_pixel(x, y, 0, 0, 0);
    }
  }
  return out;
}

GaussianFit fit_gaussian(const EmbeddingSet& set) {
  const std::size_t n = set.count();
  const std::size_t d = set.dim();
  if (n < 2) throw Error(ErrorKind::kInvalidArgument, "fit_gaussian needs n >= 2");
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
      set.values().data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  const Vector mean = x.colwise().mean();
  const Matrix centered = x.rowwise() - mean.transpose();
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  cov = 0.5 * (cov + cov.transpose()).eval();

  GaussianFit fit;
  fit.dim = d;
  fit.mean.assign(mean.data(), mean.data() + d);
  fit.cov.resize(d * d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      fit.cov[i * d + j] = cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  return fit;
}

double frechet_distance(const GaussianFit& a, const GaussianFit& b) {
  if (a.dim != b.dim) throw Error(ErrorKind::kDimensionMismatch, "gaussian fits differ in dim");
  double mean_term = 0.0;
  for (std::size_t i = 0; i < a.dim; ++i) {
    const double diff = a.mean[i] - b.mean[i];
    mean_term += diff * diff;
  }
  const Matrix sa = as_matrix(a);
  const Matrix sb = as_matrix(b);
  const Matrix root_a = psd_sqrt(sa, "covariance of first set");
  Matrix sandwich = root_a * sb * root_a;
  sandwich = 0.5 * (sandwich + sandwich.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Matrix> solver(sandwich, Eigen::EigenvaluesOnly);
  double trace_sqrt = 0.0;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
    const double v = solver.eigenvalues()[i];
    if (v < -kPsdTolerance) {
      throw Error(ErrorKind::kNotPositiveSemidefinite,
                  "covariance product has eigenvalue " + std::to_string(v));
    }
    trace_sqrt += std::sqrt(std::max(v, 0.0));
  }
  const double value = mean_term + sa.trace() + sb.trace() - 2.0 * trace_sqrt;
  if (value < -kPsdTolerance) {
    throw Error(ErrorKind::kNotPositiveSemidefinite, "negative Frechet distance " + std::to_string(value));
  }
  return std::max(value, 0.0);
}

double fid(const EmbeddingSet& a, const EmbeddingSet& b) {
  require_same_dim(a, b);
  return frechet_distance(fit_gaussian(a), fit_gaussian(b));
}

double polynomial_kernel(std::span<const double> x, std::span<const double> y) noexcept {
  double dot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * y[i];
  const double base = dot / static_cast<double>(x.size()) + 1.0;
  return base * base * base;
}

double kid(const EmbeddingSet& a, const EmbeddingSet& b) {
  require_same_dim(a, b);
  return mmd2_unbiased(a, 0, a.count(), b, 0, b.count());
}

double kid_blocked(const EmbeddingSet& a, const EmbeddingSet& b, std::size_t block_size) {
  require_same_dim(a, b);
  if (block_size < 2) throw Error(ErrorKind::kInvalidArgument, "KID block size must be >= 2");
  const std::size_t blocks = std::min(a.count(), b.count()) / block_size;
  if (blocks == 0) {
    throw Error(ErrorKind::kInvalidArgument, "KID block size exceeds the smaller set");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < blocks; ++k) {
    total += mmd2_unbiased(a, k * block_size, block_size, b, k * block_size, block_size);
  }
  return total / static_cast<double>(blocks);
}

}  // namespace labelgen::metrics
