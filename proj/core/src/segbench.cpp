#include "labelgen/segbench.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>

#include "labelgen/error.hpp"
#include "labelgen/formats.hpp"

namespace labelgen::segbench {

namespace {

std::string label_name(const TaskSpec& task, const ClassTaxonomy& taxonomy, int label) {
  if (label == 0) return "background";
  if (task.num_labels == 1) return "foreground";
  int only = -1;
  for (const auto& [cls, l] : task.class_map) {
    if (l != label) continue;
    if (only != -1) return "label-" + std::to_string(label);
    only = cls;
  }
  if (only != -1) {
    if (auto it = taxonomy.classes.find(only); it != taxonomy.classes.end()) return it->second;
  }
  return "label-" + std::to_string(label);
}

std::string class_name(const ClassTaxonomy& taxonomy, int class_id) {
  auto it = taxonomy.classes.find(class_id);
  return it == taxonomy.classes.end() ? "class-" + std::to_string(class_id) : it->second;
}

}  // namespace

std::optional<SplitSizes> reference_split(std::string_view task) noexcept {
  if (task == "Dog") return SplitSizes{657, 1040};
  if (task == "Bird") return SplitSizes{366, 512};
  if (task == "FG/BG") return SplitSizes{5294, 8316};
  if (task == "MC-16") return SplitSizes{1268, 1967};
  if (task == "MC-100") return SplitSizes{540, 798};
  if (task == "MC-128") return SplitSizes{5294, 8316};
  if (task == "MC-992") return SplitSizes{5294, 8316};
  return std::nullopt;
}

bool default_includes_background(std::string_view task, int num_labels) noexcept {
  if (task == "Dog" || task == "Bird" || task == "FG/BG") return true;
  if (task.starts_with("MC-")) return false;
  return num_labels == 1;
}

std::optional<int> TaskSpec::task_label(int class_id) const {
  auto it = class_map.find(class_id);
  if (it == class_map.end()) return std::nullopt;
  return it->second;
}

TaskSpec build_task(const ClassTaxonomy& taxonomy, std::string_view name) {
  auto it = taxonomy.groups.find(std::string(name));
  if (it == taxonomy.groups.end()) {
    throw Error(ErrorKind::kUnknownTask, "taxonomy has no task '" + std::string(name) + "'");
  }
  TaskSpec task;
  task.name = std::string(name);
  task.class_map = it->second;
  int k = 0;
  for (const auto& [cls, label] : task.class_map) {
    if (!taxonomy.classes.contains(cls)) {
      throw Error(ErrorKind::kInvalidLabel, "task '" + task.name + "' groups unknown class " +
                                                std::to_string(cls));
    }
    k = std::max(k, label);
  }
  if (k < 1) throw Error(ErrorKind::kEmptyInput, "task '" + task.name + "' maps no classes");
  std::vector<bool> used(static_cast<std::size_t>(k) + 1, false);
  for (const auto& [cls, label] : task.class_map) {
    if (label < 1) throw Error(ErrorKind::kInvalidLabel, "task labels start at 1");
    used[static_cast<std::size_t>(label)] = true;
  }
  for (int l = 1; l <= k; ++l) {
    if (!used[static_cast<std::size_t>(l)]) {
      throw Error(ErrorKind::kInvalidLabel,
                  "task '" + task.name + "' labels are not contiguous: " + std::to_string(l) + " unused");
    }
  }
  task.num_labels = k;
  task.include_background = default_includes_background(name, k);
  task.expected_split = reference_split(name);
  return task;
}

ConfusionMatrix::ConfusionMatrix(int num_labels) : num_labels_(num_labels) {
  if (num_labels < 1) throw Error(ErrorKind::kInvalidArgument, "confusion matrix needs >= 1 label");
  const auto side = static_cast<std::size_t>(num_labels) + 1;
  counts_.assign(side * side, 0);
}

std::uint64_t ConfusionMatrix::at(int gt, int pred) const {
  return counts_.at(static_cast<std::size_t>(gt) * (static_cast<std::size_t>(num_labels_) + 1) +
                    static_cast<std::size_t>(pred));
}

void ConfusionMatrix::add(int gt, int pred, std::uint64_t count) {
  if (gt < 0 || gt > num_labels_ || pred < 0 || pred > num_labels_) {
    throw Error(ErrorKind::kInvalidLabel, "confusion entry outside 0.." + std::to_string(num_labels_));
  }
  counts_[static_cast<std::size_t>(gt) * (static_cast<std::size_t>(num_labels_) + 1) +
          static_cast<std::size_t>(pred)] += count;
}

std::uint64_t ConfusionMatrix::counted() const noexcept {
  std::uint64_t s = 0;
  for (auto c : counts_) s += c;
  return s;
}

std::uint64_t ConfusionMatrix::row_sum(int gt) const {
  std::uint64_t s = 0;
  for (int p = 0; p <= num_labels_; ++p) s += at(gt, p);
  return s;
}

std::uint64_t ConfusionMatrix::col_sum(int pred) const {
  std::uint64_t s = 0;
  for (int g = 0; g <= num_labels_; ++g) s += at(g, pred);
  return s;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.num_labels_ != num_labels_) {
    throw Error(ErrorKind::kDimensionMismatch, "cannot merge confusion matrices of different size");
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  ignored_ += other.ignored_;
}

void accumulate(ConfusionMatrix& cm, const Mask& pred, const Mask& gt, const TaskSpec& task,
                std::optional<int> sample_class) {
  if (pred.width() != gt.width() || pred.height() != gt.height()) {
    throw Error(ErrorKind::kDimensionMismatch, "prediction and ground truth differ in size");
  }
  if (cm.num_labels() != task.num_labels) {
    throw Error(ErrorKind::kDimensionMismatch, "confusion matrix does not match the task");
  }
  const int k = task.num_labels;
  std::optional<int> fixed;
  if (sample_class) fixed = task.task_label(*sample_class);

  const auto p = pred.labels();
  const auto g = gt.labels();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > k) {
      throw Error(ErrorKind::kInvalidLabel, "predicted label " + std::to_string(p[i]) +
                                                " exceeds task labels 0.." + std::to_string(k));
    }
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    const std::uint8_t raw = g[i];
    int label = 0;
    if (raw == kIgnoreLabel) {
      cm.add_ignored(1);
      continue;
    }
    if (raw != kBackgroundLabel) {
      const auto mapped = sample_class ? fixed : task.task_label(raw);
      if (!mapped) {
        cm.add_ignored(1);
        continue;
      }
      label = *mapped;
    }
    cm.add(label, p[i]);
  }
}

MiouResult miou(const ConfusionMatrix& cm, bool include_background) {
  if (cm.counted() == 0) throw Error(ErrorKind::kEmptyInput, "confusion matrix has no counted pixels");
  MiouResult r;
  r.per_class.resize(static_cast<std::size_t>(cm.num_labels()) + 1);
  double sum = 0.0;
  for (int k = 0; k <= cm.num_labels(); ++k) {
    const std::uint64_t tp = cm.at(k, k);
    const std::uint64_t uni = cm.row_sum(k) + cm.col_sum(k) - tp;
    if (uni == 0) continue;
    const double iou = static_cast<double>(tp) / static_cast<double>(uni);
    r.per_class[static_cast<std::size_t>(k)] = iou;
    if (k == 0 && !include_background) continue;
    r.included.push_back(k);
    sum += iou;
  }
  if (r.included.empty()) throw Error(ErrorKind::kEmptyInput, "no class has a nonzero union");
  r.mean = sum / static_cast<double>(r.included.size());
  return r;
}

ClassRanking rank_classes(const std::map<int, double>& per_class_iou, std::size_t n) {
  if (per_class_iou.size() < n) {
    throw Error(ErrorKind::kInvalidArgument, "ranking needs at least " + std::to_string(n) +
                                                 " classes, got " +
                                                 std::to_string(per_class_iou.size()));
  }
  std::vector<std::pair<int, double>> all(per_class_iou.begin(), per_class_iou.end());
  ClassRanking r;
  auto sorted = all;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  r.best.assign(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n));
  sorted = all;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return a.second < b.second; });
  r.worst.assign(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n));
  return r;
}

SplitSizes count_split(const DatasetManifest& manifest, const TaskSpec& task) {
  SplitSizes s;
  for (const auto& e : manifest.entries) {
    if (!task.task_label(e.class_id)) continue;
    if (e.provenance == Provenance::kSyntheticAnnotated) ++s.train;
    if (e.provenance == Provenance::kRealAnnotated) ++s.test;
  }
  return s;
}

BenchResult run_bench(const std::filesystem::path& pred_manifest,
                      const std::filesystem::path& gt_manifest, const ClassTaxonomy& taxonomy,
                      std::string_view task_name, std::size_t rank_n,
                      std::optional<bool> include_background) {
  const DatasetManifest pred = formats::read_manifest(pred_manifest);
  const DatasetManifest gt = formats::read_manifest(gt_manifest);
  BenchResult result;
  result.task = build_task(taxonomy, task_name);
  if (include_background) result.task.include_background = *include_background;
  result.cm = ConfusionMatrix(result.task.num_labels);

  std::unordered_map<std::string, const SampleRecord*> pred_by_id;
  for (const auto& e : pred.entries) pred_by_id.emplace(e.id, &e);

  std::map<int, ConfusionMatrix> per_class;
  for (const auto& e : gt.entries) {
    if (!result.task.task_label(e.class_id)) continue;
    auto it = pred_by_id.find(e.id);
    if (it == pred_by_id.end()) {
      throw Error(ErrorKind::kMissingField, gt_manifest.string() + ": no prediction for '" + e.id + "'");
    }
    const Mask gmask = formats::read_mask(formats::resolve_entry_path(gt_manifest, e.mask_path));
    const Mask pmask =
        formats::read_mask(formats::resolve_entry_path(pred_manifest, it->second->mask_path));
    accumulate(result.cm, pmask, gmask, result.task, e.class_id);
    auto [slot, inserted] = per_class.try_emplace(e.class_id, result.task.num_labels);
    accumulate(slot->second, pmask, gmask, result.task, e.class_id);
    ++result.samples;
  }
  if (result.samples == 0) throw Error(ErrorKind::kEmptyInput, "no ground-truth sample belongs to the task");
  result.scores = miou(result.cm, result.task.include_background);

  std::map<int, double> rankable;
  if (result.task.num_labels == 1) {
    for (const auto& [cls, cm] : per_class) {
      const std::uint64_t tp = cm.at(1, 1);
      const std::uint64_t uni = cm.row_sum(1) + cm.col_sum(1) - tp;
      if (uni > 0) result.class_fg_iou[cls] = static_cast<double>(tp) / static_cast<double>(uni);
    }
    rankable = result.class_fg_iou;
  } else {
    for (int k = 1; k <= result.task.num_labels; ++k) {
      if (const auto& v = result.scores.per_class[static_cast<std::size_t>(k)]) rankable[k] = *v;
    }
  }
  result.ranking = rank_classes(rankable, std::min(rank_n, rankable.size()));
  return result;
}

std::string format_ranking(const std::vector<std::pair<int, double>>& entries,
                           const ClassTaxonomy& taxonomy) {
  std::ostringstream out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    out << (i + 1) << '\t' << entries[i].first << '\t' << class_name(taxonomy, entries[i].first)
        << '\t' << formats::format_fixed(100.0 * entries[i].second, 1) << '\n';
  }
  return out.str();
}

std::string format_bench_report(const BenchResult& result, const ClassTaxonomy& taxonomy) {
  std::ostringstream out;
  const auto& task = result.task;
  out << "# task\t" << task.name << "\tsamples\t" << result.samples << "\tbackground\t"
      << (task.include_background ? "included" : "excluded") << '\n';
  for (int k = 0; k <= task.num_labels; ++k) {
    const auto& v = result.scores.per_class[static_cast<std::size_t>(k)];
    int id = k;
    if (task.num_labels > 1 && k > 0) {
      int only = -1;
      for (const auto& [cls, l] : task.class_map) {
        if (l == k) only = (only == -1) ? cls : -2;
      }
      if (only > 0) id = only;
    }
    out << id << '\t' << label_name(task, taxonomy, k) << '\t'
        << (v ? formats::format_fixed(*v, 6) : std::string("-")) << '\n';
  }
  out << "mIoU\t" << formats::format_fixed(result.scores.mean, 6) << '\n';

  // Binary tasks rank source classes; multi-class tasks rank task labels.
  auto rows = [&](const std::vector<std::pair<int, double>>& entries) {
    if (task.num_labels == 1) return format_ranking(entries, taxonomy);
    std::ostringstream o;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      o << (i + 1) << '\t' << entries[i].first << '\t' << label_name(task, taxonomy, entries[i].first)
        << '\t' << formats::format_fixed(100.0 * entries[i].second, 1) << '\n';
    }
    return o.str();
  };
  out << "# best\n" << rows(result.ranking.best);
  out << "# worst\n" << rows(result.ranking.worst);
  return out.str();
}

}  // namespace labelgen::segbench
