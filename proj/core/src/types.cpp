#include "labelgen/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "labelgen/error.hpp"

namespace labelgen {

namespace {

void check_extent(int width, int height) {
  if (width < 1 || height < 1) {
    throw Error(ErrorKind::kInvalidArgument,
                "extent must be at least 1x1, got " + std::to_string(width) + "x" +
                    std::to_string(height));
  }
}

}  // namespace

Mask::Mask(int width, int height, std::uint8_t fill) : width_(width), height_(height) {
  check_extent(width, height);
  labels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

Mask::Mask(int width, int height, std::vector<std::uint8_t> labels)
    : width_(width), height_(height), labels_(std::move(labels)) {
  check_extent(width, height);
  if (labels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorKind::kSizeMismatch, "mask label count " + std::to_string(labels_.size()) +
                                              " != " + std::to_string(width) + "x" +
                                              std::to_string(height));
  }
}

std::size_t Mask::foreground_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(labels_.begin(), labels_.end(), is_foreground));
}

void Mask::validate(int num_classes) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    const int label = labels_[i];
    if (label == kBackgroundLabel || label == kIgnoreLabel) continue;
    if (label > num_classes) {
      throw Error(ErrorKind::kInvalidLabel, "pixel " + std::to_string(i) + " has label " +
                                                std::to_string(label) + " outside 1.." +
                                                std::to_string(num_classes));
    }
  }
}

Image::Image(int width, int height) : width_(width), height_(height) {
  check_extent(width, height);
  data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * kChannels, 0);
}

Image::Image(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_extent(width, height);
  if (data_.size() !=
      static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * kChannels) {
    throw Error(ErrorKind::kSizeMismatch, "image byte count " + std::to_string(data_.size()) +
                                              " does not match " + std::to_string(width) + "x" +
                                              std::to_string(height) + "x3");
  }
}

void Image::set_pixel(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const std::size_t o = offset(x, y);
  data_[o] = r;
  data_[o + 1] = g;
  data_[o + 2] = b;
}

std::string_view to_string(Provenance provenance) noexcept {
  switch (provenance) {
    case Provenance::kRealAnnotated: return "real-annotated";
    case Provenance::kSyntheticAnnotated: return "synthetic-annotated";
    case Provenance::kBigGanSim: return "biggan-sim";
    case Provenance::kVqganSim: return "vqgan-sim";
    case Provenance::kToy: return "toy";
  }
  return "toy";
}

Provenance parse_provenance(std::string_view tag) {
  for (auto p : {Provenance::kRealAnnotated, Provenance::kSyntheticAnnotated,
                 Provenance::kBigGanSim, Provenance::kVqganSim, Provenance::kToy}) {
    if (to_string(p) == tag) return p;
  }
  throw Error(ErrorKind::kUnknownProvenance, "unknown provenance tag '" + std::string(tag) + "'");
}

void LabeledSample::validate() const {
  if (class_id < 1 || class_id > kMaxClassId) {
    throw Error(ErrorKind::kInvalidArgument,
                "sample '" + id + "' class id " + std::to_string(class_id) + " outside 1..1000");
  }
  if (image.width() != mask.width() || image.height() != mask.height()) {
    throw Error(ErrorKind::kDimensionMismatch, "sample '" + id + "' image and mask sizes differ");
  }
  if (confidence && !(*confidence >= 0.0 && *confidence <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "sample '" + id + "' confidence outside [0,1]");
  }
  if (uncertainty && !(*uncertainty >= 0.0 && std::isfinite(*uncertainty))) {
    throw Error(ErrorKind::kInvalidArgument, "sample '" + id + "' uncertainty is negative");
  }
}

std::optional<std::string> DatasetManifest::metadata_value(std::string_view key) const {
  for (const auto& [k, v] : metadata) {
    if (k == key) return v;
  }
  return std::nullopt;
}

void DatasetManifest::set_metadata(std::string key, std::string value) {
  for (auto& [k, v] : metadata) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  metadata.emplace_back(std::move(key), std::move(value));
}

void DatasetManifest::validate() const {
  std::set<std::string_view> seen;
  for (const auto& e : entries) {
    if (!seen.insert(e.id).second) {
      throw Error(ErrorKind::kDuplicateId, "duplicate id '" + e.id + "'");
    }
    for (const std::string* path : {&e.image_path, &e.mask_path}) {
      if (!path->empty() && path->front() == '/') {
        throw Error(ErrorKind::kInvalidArgument,
                    "entry '" + e.id + "' path '" + *path + "' is not relative");
      }
    }
  }
}

void ClassTaxonomy::validate() const {
  for (const auto& [task, mapping] : groups) {
    std::set<int> labels;
    for (const auto& [class_id, label] : mapping) {
      if (!classes.contains(class_id)) {
        throw Error(ErrorKind::kInvalidArgument, "task '" + task + "' references unknown class " +
                                                     std::to_string(class_id));
      }
      labels.insert(label);
    }
    int expected = 1;
    for (int label : labels) {
      if (label != expected++) {
        throw Error(ErrorKind::kInvalidArgument,
                    "task '" + task + "' labels are not contiguous from 1");
      }
    }
  }
}

EmbeddingSet::EmbeddingSet(std::size_t count, std::size_t dim, std::vector<double> values)
    : count_(count), dim_(dim), values_(std::move(values)) {
  if (count_ < 2 || dim_ < 1) {
    throw Error(ErrorKind::kInvalidArgument, "embedding set needs n >= 2 and d >= 1, got n=" +
                                                 std::to_string(count_) +
                                                 " d=" + std::to_string(dim_));
  }
  if (values_.size() != count_ * dim_) {
    throw Error(ErrorKind::kSizeMismatch, "embedding payload has " +
                                              std::to_string(values_.size()) + " values, expected " +
                                              std::to_string(count_ * dim_));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw Error(ErrorKind::kNonFinite, "embedding value " + std::to_string(i) + " is not finite");
    }
  }
}

}  // namespace labelgen
