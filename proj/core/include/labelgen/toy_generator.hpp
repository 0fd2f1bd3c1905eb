#pragma once

// Procedural class-conditional generator standing in for a pretrained GAN.
// Produces an image, its exact ground-truth mask, a 16-head ensemble whose
// disagreement is injected in a boundary band, and a classifier confidence.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "labelgen/sampling.hpp"
#include "labelgen/types.hpp"

namespace labelgen::toy {

enum class ShapeFamily { kEllipse, kRectangle, kStar, kCrescent };

std::string_view to_string(ShapeFamily family) noexcept;

struct ParamRange {
  double lo = 0.0;
  double hi = 0.0;

  double at(double t) const noexcept { return lo + (hi - lo) * t; }
};

struct ToyClassSpec {
  int class_id = 1;
  ShapeFamily family = ShapeFamily::kEllipse;
  /// Major diameter as a fraction of the image side; within (0, 0.9].
  ParamRange size;
  /// Minor / major axis ratio.
  ParamRange aspect;
  /// Radians.
  ParamRange rotation;
  std::array<std::uint8_t, 3> color_lo{};
  std::array<std::uint8_t, 3> color_hi{};
  int texture_id = 0;

  void validate() const;
};

struct ToyTaxonomy {
  /// Carries the "family" (1..4) and "FG/BG" task groups.
  ClassTaxonomy taxonomy;
  std::vector<ToyClassSpec> specs;
};

/// Families cycle across classes; per-class ranges are drawn from `seed`.
ToyTaxonomy toy_taxonomy(int num_classes, std::uint64_t seed);

inline constexpr int kEnsembleHeads = 16;
inline constexpr int kEnsembleClasses = 2;
inline constexpr int kBandRadius = 3;
inline constexpr std::size_t kLatentDim = 8;
/// Each head flips ceil(d * H * W / kFlipDivisor) band pixels.
inline constexpr double kFlipDivisor = 512.0;
inline constexpr double kConfidenceSlope = 0.8;
inline constexpr double kConfidenceJitter = 0.05;

struct ToyOptions {
  /// Overrides the seed-derived disagreement level.
  std::optional<double> disagreement;
  bool with_ensemble = true;
};

struct ToyOutput {
  Image image{1, 1};
  Mask gt_mask{1, 1};
  std::optional<sampling::EnsemblePrediction> ensemble;
  double confidence = 0.0;
  double disagreement = 0.0;
};

/// Latent coordinate -> [0,1]: affine on [-3, 3], clamped outside.
double latent_unit(double z) noexcept;

/// Disagreement level derived from `seed` alone.
double seeded_disagreement(std::uint64_t seed) noexcept;

/// Deterministic in (spec, z, seed, resolution, options). Resolution must be
/// 64, 128 or 256. Throws kInvalidArgument otherwise or on non-finite z.
ToyOutput toy_generate(const ToyClassSpec& spec, std::span<const double> z, std::uint64_t seed,
                       int resolution, const ToyOptions& options = {});

/// Pixels within Chebyshev distance kBandRadius of a pixel with the other label.
std::vector<std::size_t> boundary_band(const Mask& mask, int radius = kBandRadius);

}  // namespace labelgen::toy
