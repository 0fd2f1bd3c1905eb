#include "labelgen/analysis.hpp"

#include <sstream>

#include "labelgen/error.hpp"
#include "labelgen/formats.hpp"

namespace labelgen::analysis {

namespace {

std::string cell(const std::optional<double>& v, int decimals) {
  return v ? formats::format_fixed(*v, decimals) : std::string("-");
}

std::string exact(const std::optional<double>& v) {
  return v ? formats::format_real(*v) : std::string("-");
}

std::optional<double> scaled(const std::optional<double>& v, double factor) {
  if (!v) return std::nullopt;
  return *v * factor;
}

}  // namespace

std::optional<geometry::ContourPolygon> sample_polygon(const Mask& mask, const AnalysisOptions& options) {
  auto contour = geometry::largest_component_polygon(mask, options.min_pixels);
  if (!contour) return std::nullopt;
  if (!contour->degenerate) {
    contour->polygon = geometry::simplify_closed(contour->polygon, options.epsilon);
  }
  return contour;
}

AnalysisReport analyze(std::string dataset, const std::vector<LoadedMask>& masks,
                       const AnalysisOptions& options) {
  if (masks.empty()) throw Error(ErrorKind::kEmptyInput, "empty dataset");
  AnalysisReport r;
  r.dataset = std::move(dataset);
  r.size = masks.size();

  double pixels = 0.0, fg = 0.0, bbox = 0.0;
  double pl = 0.0, sc = 0.0;
  std::map<int, std::vector<geometry::Polygon>> by_class;
  for (const auto& m : masks) {
    const auto s = geometry::mask_stats(m.mask);
    r.instance_count += s.instance_count;
    r.mask_over_image += s.mask_over_image;
    r.bbox_over_image += s.bbox_over_image;
    r.mask_over_bbox += s.mask_over_bbox;
    const double area = static_cast<double>(m.mask.size());
    pixels += area;
    fg += s.mask_over_image * area;
    bbox += s.bbox_over_image * area;

    auto poly = sample_polygon(m.mask, options);
    if (!poly) continue;
    if (poly->degenerate) {
      ++r.degenerate_polygons;
      continue;
    }
    ++r.polygons;
    pl += geometry::polygon_length(poly->polygon);
    sc += static_cast<double>(geometry::shape_complexity(poly->polygon));
    by_class[m.class_id].push_back(std::move(poly->polygon));
  }
  const double n = static_cast<double>(r.size);
  r.instance_count /= n;
  r.mask_over_image /= n;
  r.bbox_over_image /= n;
  r.mask_over_bbox /= n;
  r.pooled_mask_over_image = fg / pixels;
  r.pooled_bbox_over_image = bbox / pixels;
  r.pooled_mask_over_bbox = bbox > 0.0 ? fg / bbox : 0.0;

  if (r.polygons > 0) {
    r.polygon_length = pl / static_cast<double>(r.polygons);
    r.shape_complexity = sc / static_cast<double>(r.polygons);
    bool any_pair = false;
    for (const auto& [cls, polys] : by_class) any_pair = any_pair || polys.size() >= 2;
    if (any_pair) {
      const auto sd = geometry::shape_diversity(by_class);
      r.shape_diversity = sd.value;
      r.sd_skipped_classes = sd.skipped_classes;
    }
  }
  return r;
}

std::vector<LoadedMask> load_masks(const std::filesystem::path& manifest_path) {
  const DatasetManifest manifest = formats::read_manifest(manifest_path);
  std::vector<LoadedMask> out;
  out.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) {
    out.push_back({e.class_id, formats::read_mask(formats::resolve_entry_path(manifest_path, e.mask_path))});
  }
  return out;
}

AnalysisReport analyze_manifest(const std::filesystem::path& manifest_path, const AnalysisOptions& options) {
  const DatasetManifest manifest = formats::read_manifest(manifest_path);
  if (manifest.entries.empty()) throw Error(ErrorKind::kEmptyInput, "empty dataset");
  return analyze(manifest.name, load_masks(manifest_path), options);
}

std::string format_report(const AnalysisReport& r) {
  std::ostringstream out;
  out << "dataset\tsize\tIN\tMI\tBI\tMB\tPL\tSC\tSD\tFID_image\tKIDx1000_image\tFID_label\tKIDx1000_label\n";
  out << r.dataset << '\t' << r.size << '\t' << formats::format_fixed(r.instance_count, 3) << '\t'
      << formats::format_fixed(r.mask_over_image, 3) << '\t'
      << formats::format_fixed(r.bbox_over_image, 3) << '\t'
      << formats::format_fixed(r.mask_over_bbox, 3) << '\t' << cell(r.polygon_length, 3) << '\t'
      << cell(r.shape_complexity, 3) << '\t' << cell(r.shape_diversity, 3) << '\t'
      << cell(r.image_quality.fid, 3) << '\t' << cell(scaled(r.image_quality.kid, 1000.0), 3) << '\t'
      << cell(r.label_quality.fid, 3) << '\t' << cell(scaled(r.label_quality.kid, 1000.0), 3) << '\n';
  out << '\n';
  out << "dataset\t" << r.dataset << '\n';
  out << "size\t" << r.size << '\n';
  out << "IN\t" << formats::format_real(r.instance_count) << '\n';
  out << "MI\t" << formats::format_real(r.mask_over_image) << '\n';
  out << "BI\t" << formats::format_real(r.bbox_over_image) << '\n';
  out << "MB\t" << formats::format_real(r.mask_over_bbox) << '\n';
  out << "MI_pooled\t" << formats::format_real(r.pooled_mask_over_image) << '\n';
  out << "BI_pooled\t" << formats::format_real(r.pooled_bbox_over_image) << '\n';
  out << "MB_pooled\t" << formats::format_real(r.pooled_mask_over_bbox) << '\n';
  out << "PL\t" << exact(r.polygon_length) << '\n';
  out << "SC\t" << exact(r.shape_complexity) << '\n';
  out << "SD\t" << exact(r.shape_diversity) << '\n';
  out << "polygons\t" << r.polygons << '\n';
  out << "degenerate_polygons\t" << r.degenerate_polygons << '\n';
  out << "FID_image\t" << exact(r.image_quality.fid) << '\n';
  out << "KID_image\t" << exact(r.image_quality.kid) << '\n';
  out << "FID_label\t" << exact(r.label_quality.fid) << '\n';
  out << "KID_label\t" << exact(r.label_quality.kid) << '\n';
  return out.str();
}

std::string format_scatter(const std::vector<geometry::Point>& centers) {
  std::string out;
  for (const auto& c : centers) {
    out += formats::format_real(c.x) + '\t' + formats::format_real(c.y) + '\n';
  }
  return out;
}

std::string format_mean_shapes(const std::vector<geometry::MeanShapeSet>& sets) {
  std::string out;
  for (const auto& s : sets) {
    for (std::size_t c = 0; c < s.shapes.size(); ++c) {
      out += std::to_string(s.class_id) + '\t' + std::to_string(c) + '\t' +
             std::to_string(s.cluster_sizes[c]) + '\t';
      for (std::size_t i = 0; i < s.shapes[c].size(); ++i) {
        if (i) out += ',';
        out += formats::format_fixed(s.shapes[c][i], 6);
      }
      out += '\n';
    }
  }
  return out;
}

}  // namespace labelgen::analysis
