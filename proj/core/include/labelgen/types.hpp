#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace labelgen {

inline constexpr std::uint8_t kBackgroundLabel = 0;
inline constexpr std::uint8_t kIgnoreLabel = 255;
inline constexpr int kMaxMaskClass = 254;
inline constexpr int kMaxClassId = 1000;

constexpr bool is_foreground(std::uint8_t label) noexcept {
  return label != kBackgroundLabel && label != kIgnoreLabel;
}

/// Per-pixel label grid, row-major. 0 is background, 255 is ignore and
/// 1..254 are class ids.
class Mask {
 public:
  Mask(int width, int height, std::uint8_t fill = kBackgroundLabel);
  Mask(int width, int height, std::vector<std::uint8_t> labels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return labels_.size(); }

  std::uint8_t at(int x, int y) const { return labels_[index(x, y)]; }
  void set(int x, int y, std::uint8_t label) { labels_[index(x, y)] = label; }

  std::span<const std::uint8_t> labels() const noexcept { return labels_; }
  std::span<std::uint8_t> labels() noexcept { return labels_; }

  std::size_t foreground_count() const noexcept;

  /// Throws kInvalidLabel if any pixel lies outside {0, 255} and 1..num_classes.
  void validate(int num_classes) const;

  bool operator==(const Mask&) const = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_;
  int height_;
  std::vector<std::uint8_t> labels_;
};

/// 8-bit RGB, row-major, interleaved.
class Image {
 public:
  static constexpr int kChannels = 3;

  Image(int width, int height);
  Image(int width, int height, std::vector<std::uint8_t> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  std::span<const std::uint8_t> data() const noexcept { return data_; }
  std::span<std::uint8_t> data() noexcept { return data_; }

  std::span<const std::uint8_t, 3> pixel(int x, int y) const {
    return std::span<const std::uint8_t, 3>(data_.data() + offset(x, y), 3);
  }
  void set_pixel(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);

  bool operator==(const Image&) const = default;

 private:
  std::size_t offset(int x, int y) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) * kChannels;
  }

  int width_;
  int height_;
  std::vector<std::uint8_t> data_;
};

enum class Provenance { kRealAnnotated, kSyntheticAnnotated, kBigGanSim, kVqganSim, kToy };

std::string_view to_string(Provenance provenance) noexcept;
/// Throws kUnknownProvenance.
Provenance parse_provenance(std::string_view tag);

/// An image with its dense annotation and the scores the filters attach.
struct LabeledSample {
  std::string id;
  int class_id = 1;
  Image image{1, 1};
  Mask mask{1, 1};
  std::uint64_t latent_seed = 0;
  Provenance provenance = Provenance::kToy;
  std::optional<double> confidence;
  std::optional<double> uncertainty;

  void validate() const;
};

/// Manifest row: a LabeledSample by reference (paths relative to the manifest).
struct SampleRecord {
  std::string id;
  int class_id = 1;
  std::string image_path;
  std::string mask_path;
  Provenance provenance = Provenance::kToy;
  std::uint64_t latent_seed = 0;
  std::optional<double> confidence;
  std::optional<double> uncertainty;

  bool operator==(const SampleRecord&) const = default;
};

struct DatasetManifest {
  std::string name;
  /// Creation parameters in insertion order (truncation, rejection rate, ...).
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<SampleRecord> entries;

  std::optional<std::string> metadata_value(std::string_view key) const;
  void set_metadata(std::string key, std::string value);
  /// Throws kDuplicateId / kInvalidArgument.
  void validate() const;

  bool operator==(const DatasetManifest&) const = default;
};

struct ClassTaxonomy {
  std::map<int, std::string> classes;
  /// task name -> (class id -> task label)
  std::map<std::string, std::map<int, int>> groups;

  /// Task labels contiguous 1..K per task, grouped ids must exist.
  void validate() const;
  bool operator==(const ClassTaxonomy&) const = default;
};

/// n x d matrix of external image embeddings, row-major.
class EmbeddingSet {
 public:
  EmbeddingSet(std::size_t count, std::size_t dim, std::vector<double> values);

  std::size_t count() const noexcept { return count_; }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values_).subspan(i * dim_, dim_);
  }
  std::span<const double> values() const noexcept { return values_; }

  bool operator==(const EmbeddingSet&) const = default;

 private:
  std::size_t count_;
  std::size_t dim_;
  std::vector<double> values_;
};

}  // namespace labelgen
