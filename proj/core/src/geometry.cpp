#include "labelgen/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>

#include "labelgen/error.hpp"
#include "labelgen/formats.hpp"

namespace labelgen::geometry {

namespace {

// Clockwise with y pointing down: E, SE, S, SW, W, NW, N, NE.
constexpr std::array<int, 8> kDx{1, 1, 0, -1, -1, -1, 0, 1};
constexpr std::array<int, 8> kDy{0, 1, 1, 1, 0, -1, -1, -1};

int direction_of(int dx, int dy) {
  for (int d = 0; d < 8; ++d) {
    if (kDx[d] == dx && kDy[d] == dy) return d;
  }
  return -1;
}

double squared_distance(Point a, Point b) noexcept {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

}  // namespace

Mask Component::to_mask(int width, int height, std::uint8_t label) const {
  Mask mask(width, height);
  auto labels = mask.labels();
  for (std::size_t p : pixels) labels[p] = label;
  return mask;
}

std::vector<Component> connected_components(const Mask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  const auto labels = mask.labels();
  std::vector<bool> visited(labels.size(), false);
  std::vector<Component> components;
  std::deque<std::size_t> queue;

  for (std::size_t seed = 0; seed < labels.size(); ++seed) {
    if (visited[seed] || !is_foreground(labels[seed])) continue;
    Component component;
    const int sx = static_cast<int>(seed % static_cast<std::size_t>(w));
    const int sy = static_cast<int>(seed / static_cast<std::size_t>(w));
    component.bbox = BBox{sx, sy, sx, sy};
    visited[seed] = true;
    queue.push_back(seed);
    while (!queue.empty()) {
      const std::size_t p = queue.front();
      queue.pop_front();
      component.pixels.push_back(p);
      const int x = static_cast<int>(p % static_cast<std::size_t>(w));
      const int y = static_cast<int>(p / static_cast<std::size_t>(w));
      auto& box = component.bbox;
      box.x0 = std::min(box.x0, x);
      box.x1 = std::max(box.x1, x);
      box.y0 = std::min(box.y0, y);
      box.y1 = std::max(box.y1, y);
      for (int d = 0; d < 8; ++d) {
        const int nx = x + kDx[d];
        const int ny = y + kDy[d];
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const std::size_t q = static_cast<std::size_t>(ny) * static_cast<std::size_t>(w) +
                              static_cast<std::size_t>(nx);
        if (!visited[q] && is_foreground(labels[q])) {
          visited[q] = true;
          queue.push_back(q);
        }
      }
    }
    std::sort(component.pixels.begin(), component.pixels.end());
    components.push_back(std::move(component));
  }
  // Discovery order is already ascending by top-left index.
  std::stable_sort(components.begin(), components.end(),
                   [](const Component& a, const Component& b) { return a.size() > b.size(); });
  return components;
}

std::optional<BBox> foreground_bbox(const Mask& mask) {
  std::optional<BBox> box;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!is_foreground(mask.at(x, y))) continue;
      if (!box) {
        box = BBox{x, y, x, y};
      } else {
        box->x0 = std::min(box->x0, x);
        box->x1 = std::max(box->x1, x);
        box->y0 = std::min(box->y0, y);
        box->y1 = std::max(box->y1, y);
      }
    }
  }
  return box;
}

MaskStats mask_stats(const Mask& mask) {
  const auto box = foreground_bbox(mask);
  if (!box) return MaskStats{};
  const double image_area = static_cast<double>(mask.size());
  const double fg = static_cast<double>(mask.foreground_count());
  const double bbox_area = static_cast<double>(box->area());
  MaskStats stats;
  stats.instance_count = static_cast<int>(connected_components(mask).size());
  stats.mask_over_image = fg / image_area;
  stats.bbox_over_image = bbox_area / image_area;
  stats.mask_over_bbox = fg / bbox_area;
  return stats;
}

std::vector<Point> trace_outer_contour(const Mask& mask, const Component& component) {
  if (component.pixels.empty()) return {};
  const int w = mask.width();
  const auto& box = component.bbox;
  // Membership grid over the bbox with a one-pixel margin.
  const int gw = box.width() + 2;
  const int gh = box.height() + 2;
  std::vector<bool> inside(static_cast<std::size_t>(gw) * static_cast<std::size_t>(gh), false);
  for (std::size_t p : component.pixels) {
    const int x = static_cast<int>(p % static_cast<std::size_t>(w)) - box.x0 + 1;
    const int y = static_cast<int>(p / static_cast<std::size_t>(w)) - box.y0 + 1;
    inside[static_cast<std::size_t>(y) * gw + x] = true;
  }
  auto member = [&](int x, int y) {
    return inside[static_cast<std::size_t>(y) * gw + x];
  };

  const std::size_t start_index = component.pixels.front();
  const int sx = static_cast<int>(start_index % static_cast<std::size_t>(w)) - box.x0 + 1;
  const int sy = static_cast<int>(start_index / static_cast<std::size_t>(w)) - box.y0 + 1;

  // Moore-neighbour tracing. `back` is the direction from the current pixel to
  // the last background neighbour examined; the top-left pixel's west
  // neighbour is always background.
  auto next_move = [&](int x, int y, int back) -> std::pair<int, int> {
    for (int i = 1; i <= 8; ++i) {
      const int d = (back + i) % 8;
      if (member(x + kDx[d], y + kDy[d])) {
        const int prev = (d + 7) % 8;
        const int bx = x + kDx[prev] - (x + kDx[d]);
        const int by = y + kDy[prev] - (y + kDy[d]);
        return {d, direction_of(bx, by)};
      }
    }
    return {-1, -1};
  };

  std::vector<std::pair<int, int>> chain{{sx, sy}};
  auto [first_dir, first_back] = next_move(sx, sy, 4);
  if (first_dir >= 0) {
    int x = sx + kDx[first_dir];
    int y = sy + kDy[first_dir];
    int back = first_back;
    // Each pixel is entered at most once per neighbour direction.
    const std::size_t max_steps = 8 * component.pixels.size() + 8;
    while (chain.size() <= max_steps) {
      const auto [d, nb] = next_move(x, y, back);
      if (x == sx && y == sy && d == first_dir) break;
      chain.emplace_back(x, y);
      x += kDx[d];
      y += kDy[d];
      back = nb;
    }
  }

  std::vector<Point> points;
  const std::size_t n = chain.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& prev = chain[(i + n - 1) % n];
    const auto& cur = chain[i];
    const auto& next = chain[(i + 1) % n];
    const bool same_step = n > 1 && cur.first - prev.first == next.first - cur.first &&
                           cur.second - prev.second == next.second - cur.second;
    if (!same_step) {
      points.push_back(Point{static_cast<double>(cur.first - 1 + box.x0),
                             static_cast<double>(cur.second - 1 + box.y0)});
    }
  }
  return points;
}

Polygon normalize_unit_square(std::span<const Point> points, bool& degenerate) {
  degenerate = points.size() < 3;
  if (points.empty()) return Polygon{};
  double min_x = points[0].x, max_x = points[0].x;
  double min_y = points[0].y, max_y = points[0].y;
  for (const Point& p : points) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const double ex = max_x - min_x;
  const double ey = max_y - min_y;
  if (ex <= 0.0 || ey <= 0.0) degenerate = true;
  std::vector<Point> out;
  out.reserve(points.size());
  for (const Point& p : points) {
    out.push_back(Point{ex > 0.0 ? (p.x - min_x) / ex : 0.0, ey > 0.0 ? (p.y - min_y) / ey : 0.0});
  }
  return Polygon(std::move(out));
}

std::optional<ContourPolygon> largest_component_polygon(const Mask& mask, std::size_t min_pixels) {
  const auto components = connected_components(mask);
  if (components.empty() || components.front().size() < min_pixels) return std::nullopt;
  const auto contour = trace_outer_contour(mask, components.front());
  ContourPolygon result;
  result.polygon = normalize_unit_square(contour, result.degenerate);
  return result;
}

double point_segment_distance(Point p, Point a, Point b) noexcept {
  const double vx = b.x - a.x;
  const double vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  if (len2 == 0.0) return std::sqrt(squared_distance(p, a));
  const double t = std::clamp(((p.x - a.x) * vx + (p.y - a.y) * vy) / len2, 0.0, 1.0);
  return std::sqrt(squared_distance(p, Point{a.x + t * vx, a.y + t * vy}));
}

std::vector<Point> simplify_dp(std::span<const Point> polyline, double epsilon) {
  const std::size_t n = polyline.size();
  if (n <= 2) return std::vector<Point>(polyline.begin(), polyline.end());
  std::vector<bool> keep(n, false);
  keep.front() = keep.back() = true;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, n - 1}};
  while (!stack.empty()) {
    const auto [first, last] = stack.back();
    stack.pop_back();
    if (last <= first + 1) continue;
    double max_distance = -1.0;
    std::size_t split = first;
    for (std::size_t i = first + 1; i < last; ++i) {
      const double d = point_segment_distance(polyline[i], polyline[first], polyline[last]);
      if (d > max_distance) {
        max_distance = d;
        split = i;
      }
    }
    if (max_distance >= epsilon) {
      keep[split] = true;
      stack.emplace_back(split, last);
      stack.emplace_back(first, split);
    }
  }
  std::vector<Point> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (keep[i]) out.push_back(polyline[i]);
  }
  return out;
}

Polygon simplify_closed(const Polygon& polygon, double epsilon) {
  const auto& pts = polygon.points();
  const std::size_t n = pts.size();
  if (n <= 3) return polygon;

  std::size_t far = 1;
  double far_d = -1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const double d = squared_distance(pts[0], pts[i]);
    if (d > far_d) {
      far_d = d;
      far = i;
    }
  }

  std::vector<Point> first_chain(pts.begin(), pts.begin() + static_cast<std::ptrdiff_t>(far) + 1);
  std::vector<Point> second_chain(pts.begin() + static_cast<std::ptrdiff_t>(far), pts.end());
  second_chain.push_back(pts[0]);

  std::vector<Point> out = simplify_dp(first_chain, epsilon);
  const auto tail = simplify_dp(second_chain, epsilon);
  out.insert(out.end(), tail.begin() + 1, tail.end() - 1);

  if (out.size() < 3) {
    // Keep the three extremal points: start, farthest, and the point with the
    // largest deviation from the segment between them.
    std::size_t third = 0;
    double third_d = -1.0;
    for (std::size_t i = 1; i < n; ++i) {
      if (i == far) continue;
      const double d = point_segment_distance(pts[i], pts[0], pts[far]);
      if (d > third_d) {
        third_d = d;
        third = i;
      }
    }
    std::array<std::size_t, 3> idx{0, far, third};
    std::sort(idx.begin(), idx.end());
    out = {pts[idx[0]], pts[idx[1]], pts[idx[2]]};
  }
  return Polygon(std::move(out));
}

double polygon_length(const Polygon& polygon) noexcept {
  const auto& pts = polygon.points();
  if (pts.size() < 2) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    total += std::sqrt(squared_distance(pts[i], pts[(i + 1) % pts.size()]));
  }
  return total;
}

std::size_t shape_complexity(const Polygon& polygon) noexcept { return polygon.size(); }

double chamfer(std::span<const Point> a, std::span<const Point> b) {
  if (a.empty() || b.empty()) throw Error(ErrorKind::kEmptyInput, "chamfer of an empty point set");
  auto directed = [](std::span<const Point> from, std::span<const Point> to) {
    double sum = 0.0;
    for (const Point& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const Point& q : to) best = std::min(best, squared_distance(p, q));
      sum += best;
    }
    return sum;
  };
  return directed(a, b) + directed(b, a);
}

ShapeDiversity shape_diversity(const std::map<int, std::vector<Polygon>>& polygons_by_class) {
  ShapeDiversity result;
  double total = 0.0;
  for (const auto& [class_id, polygons] : polygons_by_class) {
    if (polygons.size() < 2) {
      result.skipped_classes.push_back(class_id);
      continue;
    }
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < polygons.size(); ++i) {
      for (std::size_t j = i + 1; j < polygons.size(); ++j) {
        sum += chamfer(polygons[i].points(), polygons[j].points());
        ++pairs;
      }
    }
    const double mean = sum / static_cast<double>(pairs);
    result.per_class[class_id] = mean;
    total += mean;
  }
  if (result.per_class.empty()) {
    throw Error(ErrorKind::kEmptyInput, "shape diversity needs a class with at least 2 polygons");
  }
  result.value = total / static_cast<double>(result.per_class.size());
  return result;
}

std::vector<double> crop_resize(const Mask& mask, int side) {
  const auto box = foreground_bbox(mask);
  if (!box) throw Error(ErrorKind::kEmptyInput, "crop_resize of an empty mask");
  if (side < 1) throw Error(ErrorKind::kInvalidArgument, "resize side must be positive");

  // weights[o][s]: overlap of source cell s with output cell o, in source units.
  auto axis_weights = [side](int extent) {
    std::vector<std::vector<std::pair<int, double>>> weights(static_cast<std::size_t>(side));
    const double scale = static_cast<double>(extent) / side;
    for (int o = 0; o < side; ++o) {
      const double lo = o * scale;
      const double hi = (o + 1) * scale;
      for (int s = static_cast<int>(std::floor(lo)); s < extent && s < hi; ++s) {
        const double overlap = std::min(hi, s + 1.0) - std::max(lo, static_cast<double>(s));
        if (overlap > 0.0) weights[static_cast<std::size_t>(o)].emplace_back(s, overlap);
      }
    }
    return weights;
  };
  const auto wx = axis_weights(box->width());
  const auto wy = axis_weights(box->height());
  const double cell_area = (static_cast<double>(box->width()) / side) *
                           (static_cast<double>(box->height()) / side);

  std::vector<double> out(static_cast<std::size_t>(side) * static_cast<std::size_t>(side), 0.0);
  for (int oy = 0; oy < side; ++oy) {
    for (int ox = 0; ox < side; ++ox) {
      double acc = 0.0;
      for (const auto& [sy, wyv] : wy[static_cast<std::size_t>(oy)]) {
        for (const auto& [sx, wxv] : wx[static_cast<std::size_t>(ox)]) {
          if (is_foreground(mask.at(box->x0 + sx, box->y0 + sy))) acc += wxv * wyv;
        }
      }
      out[static_cast<std::size_t>(oy) * side + ox] = std::clamp(acc / cell_area, 0.0, 1.0);
    }
  }
  return out;
}

MeanShapeSet mean_shapes(std::span<const Mask> masks, int k, std::uint64_t seed, int class_id) {
  std::vector<std::vector<double>> vectors;
  for (const Mask& m : masks) {
    if (m.foreground_count() == 0) continue;
    vectors.push_back(crop_resize(m, kMeanShapeSide));
  }
  if (k < 1 || vectors.size() < static_cast<std::size_t>(k)) {
    throw Error(ErrorKind::kEmptyInput, "mean shapes need at least k=" + std::to_string(k) +
                                            " nonempty masks, got " +
                                            std::to_string(vectors.size()));
  }
  auto clusters = kmeans(vectors, k, seed);
  MeanShapeSet result;
  result.class_id = class_id;
  result.shapes = std::move(clusters.centroids);
  result.cluster_sizes = std::move(clusters.sizes);
  result.assignment = std::move(clusters.assignment);
  return result;
}

std::optional<Point> bbox_center(const Mask& mask) {
  const auto box = foreground_bbox(mask);
  if (!box) return std::nullopt;
  return Point{(box->x0 + box->x1 + 1) / 2.0 / mask.width(),
               (box->y0 + box->y1 + 1) / 2.0 / mask.height()};
}

std::vector<Point> center_scatter(std::span<const Mask> masks) {
  std::vector<Point> centers;
  for (const Mask& m : masks) {
    if (auto c = bbox_center(m)) centers.push_back(*c);
  }
  return centers;
}

std::string format_polygons(std::span<const std::pair<int, Polygon>> polygons) {
  std::string out;
  for (const auto& [class_id, polygon] : polygons) {
    out += std::to_string(class_id);
    out += '\t';
    bool first = true;
    for (const Point& p : polygon.points()) {
      if (!first) out += ';';
      first = false;
      out += formats::format_fixed(p.x, 6);
      out += ',';
      out += formats::format_fixed(p.y, 6);
    }
    out += '\n';
  }
  return out;
}

std::vector<std::pair<int, Polygon>> parse_polygons(std::string_view text) {
  std::vector<std::pair<int, Polygon>> out;
  std::size_t line_no = 0;
  for (std::string_view line : formats::split(text, '\n')) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = formats::split(line, '\t');
    if (fields.size() != 2) {
      throw Error(ErrorKind::kParse, "polygons:" + std::to_string(line_no) + ": expected 2 fields");
    }
    std::vector<Point> points;
    for (std::string_view pair : formats::split(fields[1], ';')) {
      const auto xy = formats::split(pair, ',');
      if (xy.size() != 2) {
        throw Error(ErrorKind::kParse, "polygons:" + std::to_string(line_no) + ": bad point");
      }
      points.push_back(Point{formats::parse_real(xy[0]), formats::parse_real(xy[1])});
    }
    out.emplace_back(static_cast<int>(formats::parse_int(fields[0])), Polygon(std::move(points)));
  }
  return out;
}

}  // namespace labelgen::geometry
