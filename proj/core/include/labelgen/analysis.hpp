#pragma once

// Dataset-level statistics table: mask statistics, polygon geometry and
// optional distribution distances.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "labelgen/geometry.hpp"
#include "labelgen/types.hpp"

namespace labelgen::analysis {

struct DistanceColumns {
  std::optional<double> fid;
  /// Raw unbiased MMD^2.
  std::optional<double> kid;
};

struct AnalysisReport {
  std::string dataset;
  std::size_t size = 0;
  // Per-image means.
  double instance_count = 0.0;
  double mask_over_image = 0.0;
  double bbox_over_image = 0.0;
  double mask_over_bbox = 0.0;
  // Pooled over all pixels of the dataset.
  double pooled_mask_over_image = 0.0;
  double pooled_bbox_over_image = 0.0;
  double pooled_mask_over_bbox = 0.0;
  std::optional<double> polygon_length;
  std::optional<double> shape_complexity;
  std::optional<double> shape_diversity;
  std::size_t polygons = 0;
  std::size_t degenerate_polygons = 0;
  std::vector<int> sd_skipped_classes;
  DistanceColumns image_quality;
  DistanceColumns label_quality;
};

struct AnalysisOptions {
  double epsilon = geometry::kSimplifyEpsilon;
  std::size_t min_pixels = geometry::kMinPolygonPixels;
};

struct LoadedMask {
  int class_id = 0;
  Mask mask{1, 1};
};

/// Simplified, normalized polygon of each mask's largest component, or
/// nothing when filtered out. Degenerate contours come back flagged.
std::optional<geometry::ContourPolygon> sample_polygon(const Mask& mask, const AnalysisOptions& options);

/// Throws kEmptyInput ("empty dataset") for no masks.
AnalysisReport analyze(std::string dataset, const std::vector<LoadedMask>& masks,
                       const AnalysisOptions& options = {});

std::vector<LoadedMask> load_masks(const std::filesystem::path& manifest_path);
AnalysisReport analyze_manifest(const std::filesystem::path& manifest_path,
                                const AnalysisOptions& options = {});

/// Header row and value row (3 decimals, "-" when absent), a blank line, then
/// `key \t value` lines at full precision.
std::string format_report(const AnalysisReport& report);

/// `cx \t cy` per nonempty mask.
std::string format_scatter(const std::vector<geometry::Point>& centers);

/// `class_id \t cluster \t size \t v0,v1,...` with 6 decimals.
std::string format_mean_shapes(const std::vector<geometry::MeanShapeSet>& sets);

}  // namespace labelgen::analysis
