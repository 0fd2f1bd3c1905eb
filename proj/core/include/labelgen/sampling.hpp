#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "labelgen/rng.hpp"
#include "labelgen/types.hpp"

namespace labelgen::sampling {

/// Filter parameters. Defaults are the values used for the BigGAN-sim and
/// VQGAN-sim datasets.
struct FilterConfig {
  double truncation_psi = 0.9;
  double rejection_rate = 0.9;
  double nucleus_p = 0.92;
  int top_k = 200;
  double uncertainty_fraction = 0.10;

  /// psi > 0, rate and fraction in [0,1), p in (0,1], k >= 1.
  void validate() const;
  bool operator==(const FilterConfig&) const = default;
};

/// `key=value` lines; '#' starts a comment. Unknown keys are errors.
FilterConfig parse_filter_config(std::string_view text, FilterConfig base = {});
FilterConfig read_filter_config(const std::filesystem::path& path, FilterConfig base = {});
std::string format_filter_config(const FilterConfig& config);

class CategoricalDist {
 public:
  /// Throws kInvalidArgument unless entries are >= 0 and sum to 1 within 1e-9.
  explicit CategoricalDist(std::vector<double> probs);

  std::span<const double> probs() const noexcept { return probs_; }
  std::size_t size() const noexcept { return probs_.size(); }

 private:
  std::vector<double> probs_;
};

/// K heads of per-pixel class distributions, laid out [head][y][x][class].
class EnsemblePrediction {
 public:
  EnsemblePrediction(int heads, int width, int height, int classes, std::vector<double> probs);

  int heads() const noexcept { return heads_; }
  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int classes() const noexcept { return classes_; }

  std::span<const double> pixel(int head, int x, int y) const {
    return std::span<const double>(probs_).subspan(offset(head, x, y),
                                                   static_cast<std::size_t>(classes_));
  }
  std::span<const double> values() const noexcept { return probs_; }

  /// Each pixel distribution sums to 1 within 1e-6.
  void validate() const;

 private:
  std::size_t offset(int head, int x, int y) const noexcept {
    return ((static_cast<std::size_t>(head) * height_ + y) * width_ + x) *
           static_cast<std::size_t>(classes_);
  }

  int heads_;
  int width_;
  int height_;
  int classes_;
  std::vector<double> probs_;
};

/// Each coordinate is a standard normal redrawn until |z| <= psi.
std::vector<double> truncated_normal(std::size_t dim, double psi, Rng& rng);

struct NucleusSupport {
  std::vector<std::size_t> indices;
  /// Renormalized over the support.
  std::vector<double> probs;
};

/// Sorts descending (ties by index), keeps the shortest prefix whose mass
/// reaches p, cut to at most k entries.
NucleusSupport nucleus_topk_support(const CategoricalDist& dist, double p, std::size_t k);
std::size_t nucleus_topk_sample(const CategoricalDist& dist, double p, std::size_t k, Rng& rng);
std::size_t sample_from_support(const NucleusSupport& support, Rng& rng);

/// Natural-log entropy; 0 ln 0 = 0.
double entropy(std::span<const double> probs) noexcept;

/// H(mean of P_i) - mean of H(P_i), clamped to [0, ln N].
double js_divergence(std::span<const CategoricalDist> dists);
double js_divergence(std::span<const std::span<const double>> dists);

/// Mean over pixels of the JS divergence across heads.
double sample_uncertainty(const EnsemblePrediction& prediction);

/// ceil(x) with a 1e-9 slack so that e.g. 0.1 * 20 does not round up to 3.
std::size_t ceil_count(double x) noexcept;

struct ScoredId {
  std::string id;
  double score = 0.0;
};

/// Drops the ceil(fraction * n) highest scores; among equal scores the larger
/// id is dropped first. Returns kept indices in input order.
std::vector<std::size_t> uncertainty_filter(std::span<const ScoredId> samples, double fraction);

/// Keeps the ceil((1 - rate) * n) highest scores; among equal scores the
/// smaller id is kept. Returns kept indices in input order.
std::vector<std::size_t> confidence_rejection(std::span<const ScoredId> samples, double rate);

/// Sample-level wrappers; every sample must carry the relevant score.
std::vector<LabeledSample> uncertainty_filter(std::vector<LabeledSample> samples, double fraction);
std::vector<LabeledSample> confidence_rejection(std::vector<LabeledSample> samples, double rate);

}  // namespace labelgen::sampling
