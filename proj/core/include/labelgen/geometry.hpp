#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "labelgen/types.hpp"

namespace labelgen::geometry {

struct Point {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point&) const = default;
};

/// Inclusive pixel bounds.
struct BBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const noexcept { return x1 - x0 + 1; }
  int height() const noexcept { return y1 - y0 + 1; }
  std::size_t area() const noexcept {
    return static_cast<std::size_t>(width()) * static_cast<std::size_t>(height());
  }
  bool operator==(const BBox&) const = default;
};

/// An 8-connected foreground component. `pixels` holds row-major indices in
/// ascending order, so pixels.front() is the top-left pixel.
struct Component {
  std::vector<std::size_t> pixels;
  BBox bbox;

  std::size_t size() const noexcept { return pixels.size(); }
  Mask to_mask(int width, int height, std::uint8_t label = 1) const;
};

/// Components ordered by pixel count descending, ties by top-left index.
std::vector<Component> connected_components(const Mask& mask);

/// Tight axis-aligned box over all foreground pixels.
std::optional<BBox> foreground_bbox(const Mask& mask);

struct MaskStats {
  int instance_count = 0;       // IN
  double mask_over_image = 0;   // MI
  double bbox_over_image = 0;   // BI
  double mask_over_bbox = 0;    // MB

  bool operator==(const MaskStats&) const = default;
};

MaskStats mask_stats(const Mask& mask);

class Polygon {
 public:
  Polygon() = default;
  explicit Polygon(std::vector<Point> points) : points_(std::move(points)) {}

  const std::vector<Point>& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }

  bool operator==(const Polygon&) const = default;

 private:
  std::vector<Point> points_;
};

/// Outer boundary of `component` in pixel-center coordinates, traced
/// clockwise (y down) from its top-left pixel. Runs of identical chain
/// steps are compressed to their end points.
std::vector<Point> trace_outer_contour(const Mask& mask, const Component& component);

/// Per-axis min/max normalization into [0,1]. An axis with zero extent maps
/// every point to 0 and sets `degenerate`.
Polygon normalize_unit_square(std::span<const Point> points, bool& degenerate);

struct ContourPolygon {
  Polygon polygon;
  /// Zero extent on an axis or fewer than 3 points; excluded from PL/SC/SD.
  bool degenerate = false;
};

inline constexpr std::size_t kMinPolygonPixels = 100;
inline constexpr double kSimplifyEpsilon = 0.01;

/// Normalized outer contour of the largest component, or nothing when that
/// component has fewer than `min_pixels` pixels.
std::optional<ContourPolygon> largest_component_polygon(const Mask& mask,
                                                        std::size_t min_pixels = kMinPolygonPixels);

double point_segment_distance(Point p, Point a, Point b) noexcept;

/// Douglas-Peucker on an open polyline; both end points are kept. A point is
/// dropped only when its distance to the anchor segment is below epsilon, so
/// epsilon = 0 is the identity.
std::vector<Point> simplify_dp(std::span<const Point> polyline, double epsilon);

/// Closed-polygon Douglas-Peucker anchored at the first point and the point
/// farthest from it. Never returns fewer than 3 points when the input has 3.
Polygon simplify_closed(const Polygon& polygon, double epsilon = kSimplifyEpsilon);

/// Closed perimeter.
double polygon_length(const Polygon& polygon) noexcept;
std::size_t shape_complexity(const Polygon& polygon) noexcept;

/// Sum-form Chamfer distance: squared nearest-neighbour distances summed over
/// the points of each set, in both directions. Throws kEmptyInput.
double chamfer(std::span<const Point> a, std::span<const Point> b);

struct ShapeDiversity {
  double value = 0.0;
  std::map<int, double> per_class;
  /// Classes with fewer than two polygons.
  std::vector<int> skipped_classes;
};

ShapeDiversity shape_diversity(const std::map<int, std::vector<Polygon>>& polygons_by_class);

/// Crops `mask` to its foreground bbox and box-averages it onto a
/// side x side grid of foreground fractions. Requires nonempty foreground.
std::vector<double> crop_resize(const Mask& mask, int side = 32);

inline constexpr int kMeanShapeSide = 32;
inline constexpr int kMeanShapeClusters = 5;

struct MeanShapeSet {
  int class_id = 0;
  int side = kMeanShapeSide;
  std::vector<std::vector<double>> shapes;
  std::vector<std::size_t> cluster_sizes;
  /// Cluster index per clustered mask, in input order (empty masks skipped).
  std::vector<int> assignment;
};

MeanShapeSet mean_shapes(std::span<const Mask> masks, int k, std::uint64_t seed,
                         int class_id = 0);

struct KMeansResult {
  std::vector<std::vector<double>> centroids;
  std::vector<int> assignment;
  std::vector<std::size_t> sizes;
  int iterations = 0;
};

/// k-means++ seeding, Lloyd iterations until the assignment stops changing
/// or `max_iterations`. Ties go to the lowest cluster index; clusters that
/// empty out are re-seeded from the point farthest from its centroid.
KMeansResult kmeans(std::span<const std::vector<double>> points, int k, std::uint64_t seed,
                    int max_iterations = 100);

/// Bbox midpoint normalized by image size; nothing for an empty mask.
std::optional<Point> bbox_center(const Mask& mask);
/// Centers of every nonempty mask, in input order.
std::vector<Point> center_scatter(std::span<const Mask> masks);

/// One polygon per line: `class_id \t x1,y1;x2,y2;...` with 6 decimals.
std::string format_polygons(std::span<const std::pair<int, Polygon>> polygons);
std::vector<std::pair<int, Polygon>> parse_polygons(std::string_view text);

}  // namespace labelgen::geometry
