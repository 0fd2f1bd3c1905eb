#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "labelgen/sampling.hpp"
#include "labelgen/toy_generator.hpp"
#include "labelgen/types.hpp"

namespace labelgen::pipeline {

struct SourceDraw {
  LabeledSample sample;
  std::optional<sampling::EnsemblePrediction> ensemble;
  std::optional<double> confidence;
  /// Ground-truth noise level when the source knows it (toy source only).
  std::optional<double> injected_disagreement;
};

/// A labeled-sample generator. `draw` must be a pure function of `counter`
/// and safe to call concurrently.
class SampleSource {
 public:
  virtual ~SampleSource() = default;

  virtual std::string_view name() const = 0;
  virtual SourceDraw draw(std::uint64_t counter, bool with_ensemble) const = 0;
  /// Parameters recorded in manifest metadata.
  virtual std::vector<std::pair<std::string, std::string>> describe() const { return {}; }
};

struct ToySourceConfig {
  int num_classes = 16;
  double truncation_psi = 0.9;
  int resolution = 64;
  std::uint64_t seed = 0;
  std::size_t latent_dim = toy::kLatentDim;
};

class ToySource final : public SampleSource {
 public:
  explicit ToySource(ToySourceConfig config);

  std::string_view name() const override { return "toy"; }
  SourceDraw draw(std::uint64_t counter, bool with_ensemble) const override;
  std::vector<std::pair<std::string, std::string>> describe() const override;

  const toy::ToyTaxonomy& taxonomy() const noexcept { return taxonomy_; }
  const ToySourceConfig& config() const noexcept { return config_; }

 private:
  ToySourceConfig config_;
  toy::ToyTaxonomy taxonomy_;
};

/// "toy-000000000042"
std::string sample_id(std::uint64_t counter);

enum class Mode { kOffline, kOnline };

struct PipelineSpec {
  /// A rate or fraction of 0 disables that stage.
  sampling::FilterConfig filters;
  Mode mode = Mode::kOffline;
  /// Requested sample count (offline) or pull count (online).
  std::size_t count = 0;
  /// Empty: nothing is written.
  std::filesystem::path output_dir;
  std::string dataset_name = "toy";
  int workers = 1;

  void validate() const;
};

inline constexpr std::size_t kWarmupSize = 1000;
/// Warmup draws come from this counter upward so the main sequence is untouched.
inline constexpr std::uint64_t kWarmupCounterBase = std::uint64_t{1} << 63;
inline constexpr double kTopUpFraction = 0.1;

/// ceil(n / ((1 - rate) * (1 - fraction)))
std::size_t candidate_pool_size(std::size_t n, double rejection_rate, double uncertainty_fraction);

struct CandidateScore {
  std::uint64_t counter = 0;
  std::string id;
  double confidence = 0.0;
  std::optional<double> uncertainty;
  std::optional<double> injected_disagreement;
  bool passed_rejection = false;
  bool passed_uncertainty = false;
  bool kept = false;
};

struct SynthResult {
  DatasetManifest manifest;
  /// Every generated candidate, by counter.
  std::vector<CandidateScore> candidates;
  std::size_t initial_pool = 0;
};

/// Batch synthesis: confidence rejection, then uncertainty filtering, over a
/// candidate pool sized so exactly `count` samples survive.
SynthResult synth_offline(const SampleSource& source, const PipelineSpec& spec);

/// Never-repeating stream. Confidence is thresholded at the rejection-rate
/// quantile of a warmup sample; the ensemble stage is not available.
class OnlineStream {
 public:
  OnlineStream(const SampleSource& source, const PipelineSpec& spec);

  LabeledSample next();
  std::optional<double> threshold() const noexcept { return threshold_; }
  std::uint64_t candidates_drawn() const noexcept { return counter_; }

 private:
  const SampleSource& source_;
  std::optional<double> threshold_;
  std::uint64_t counter_ = 0;
};

/// Pulls `spec.count` samples and writes them like synth_offline does.
DatasetManifest synth_online(const SampleSource& source, const PipelineSpec& spec);

/// Relative paths used for a sample's files.
std::string image_relpath(std::string_view id);
std::string mask_relpath(std::string_view id);
inline constexpr std::string_view kManifestFileName = "manifest.tsv";

}  // namespace labelgen::pipeline
