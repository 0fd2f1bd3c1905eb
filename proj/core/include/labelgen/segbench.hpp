#pragma once

// Segmentation benchmark: task construction, confusion matrices, mIoU and
// best/worst class ranking.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "labelgen/types.hpp"

namespace labelgen::segbench {

inline constexpr std::array<std::string_view, 7> kTaskNames{"Dog",    "Bird",   "FG/BG", "MC-16",
                                                             "MC-100", "MC-128", "MC-992"};

struct SplitSizes {
  std::size_t train = 0;
  std::size_t test = 0;
  bool operator==(const SplitSizes&) const = default;
};

/// Published train/test image counts for the named task.
std::optional<SplitSizes> reference_split(std::string_view task) noexcept;

/// Background counts as a class for the binary tasks (Dog, Bird, FG/BG) and
/// is left out for the multi-class ones. Custom tasks with one label count
/// as binary.
bool default_includes_background(std::string_view task, int num_labels) noexcept;

struct TaskSpec {
  std::string name;
  /// class id -> task label in 1..num_labels; absent classes are ignored.
  std::map<int, int> class_map;
  int num_labels = 1;
  bool include_background = true;
  std::optional<SplitSizes> expected_split;

  std::optional<int> task_label(int class_id) const;
};

/// Throws kUnknownTask if the taxonomy has no group table called `name`.
TaskSpec build_task(const ClassTaxonomy& taxonomy, std::string_view name);

class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_labels);

  int num_labels() const noexcept { return num_labels_; }
  /// Row = ground truth, column = prediction; labels 0..num_labels.
  std::uint64_t at(int gt, int pred) const;
  void add(int gt, int pred, std::uint64_t count = 1);
  void add_ignored(std::uint64_t count) noexcept { ignored_ += count; }
  std::uint64_t ignored() const noexcept { return ignored_; }
  std::uint64_t counted() const noexcept;
  std::uint64_t row_sum(int gt) const;
  std::uint64_t col_sum(int pred) const;
  void merge(const ConfusionMatrix& other);

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  int num_labels_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t ignored_ = 0;
};

/// Foreground gt pixels are read as `sample_class` when given (single-class
/// masks), otherwise as class ids themselves; they are then mapped through
/// the task. Ignore-label and unmapped pixels only bump the ignored count.
void accumulate(ConfusionMatrix& cm, const Mask& pred, const Mask& gt, const TaskSpec& task,
                std::optional<int> sample_class = std::nullopt);

struct MiouResult {
  /// Indexed by task label 0..K; empty when the label has zero union.
  std::vector<std::optional<double>> per_class;
  double mean = 0.0;
  /// Labels that entered the mean.
  std::vector<int> included;
};

/// Throws kEmptyInput when no pixel was counted.
MiouResult miou(const ConfusionMatrix& cm, bool include_background);

struct ClassRanking {
  std::vector<std::pair<int, double>> best;
  std::vector<std::pair<int, double>> worst;
};

/// Best sorted descending, worst ascending; ties by class id ascending.
ClassRanking rank_classes(const std::map<int, double>& per_class_iou, std::size_t n = 5);

/// Counts the images of `task` in a manifest: synthetic-annotated entries are
/// the training split and real-annotated entries the test split.
SplitSizes count_split(const DatasetManifest& manifest, const TaskSpec& task);

struct BenchResult {
  TaskSpec task;
  ConfusionMatrix cm{1};
  MiouResult scores;
  /// Foreground IoU per source class; used for ranking binary tasks.
  std::map<int, double> class_fg_iou;
  ClassRanking ranking;
  std::size_t samples = 0;
};

/// Pairs prediction and ground-truth masks by sample id. Prediction masks
/// hold task labels; ground-truth masks hold single-class foreground.
BenchResult run_bench(const std::filesystem::path& pred_manifest,
                      const std::filesystem::path& gt_manifest, const ClassTaxonomy& taxonomy,
                      std::string_view task_name, std::size_t rank_n = 5,
                      std::optional<bool> include_background = std::nullopt);

std::string format_bench_report(const BenchResult& result, const ClassTaxonomy& taxonomy);

/// `rank \t class_id \t name \t iou` with IoU in percent, one decimal.
std::string format_ranking(const std::vector<std::pair<int, double>>& entries,
                           const ClassTaxonomy& taxonomy);

}  // namespace labelgen::segbench
