#pragma once

// Shape and activation-memory model of grouped feature fusion versus
// resizing every feature map to the output resolution.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace labelgen::fusion {

struct LayerSpec {
  std::string name;
  int resolution = 8;
  int channels = 1;

  /// Resolution must be a power of two in [8, 512]; channels >= 1.
  void validate() const;
  bool operator==(const LayerSpec&) const = default;
};

enum class GroupLevel { kHigh, kMid, kLow };
std::string_view to_string(GroupLevel level) noexcept;

/// Resolutions 8-32 are high, 64-128 mid, 256-512 low.
GroupLevel group_of(int resolution);
/// Every member of a group is brought to this resolution.
int group_target(GroupLevel level) noexcept;

struct TensorShape {
  int channels = 0;
  int resolution = 0;

  std::uint64_t elements() const noexcept {
    return static_cast<std::uint64_t>(channels) * static_cast<std::uint64_t>(resolution) *
           static_cast<std::uint64_t>(resolution);
  }
  bool operator==(const TensorShape&) const = default;
};

enum class StageKind { kResize, kReduce, kUpsample, kConcat, kMixConv, kFuseReduce };
std::string_view to_string(StageKind kind) noexcept;

struct Stage {
  StageKind kind = StageKind::kResize;
  GroupLevel group = GroupLevel::kHigh;
  std::string label;
  std::vector<TensorShape> inputs;
  TensorShape output;
  /// Concat outputs alias their inputs.
  bool zero_copy = false;
  std::uint64_t macs = 0;

  std::uint64_t live_elements() const noexcept;
};

struct FusionGroup {
  GroupLevel level = GroupLevel::kHigh;
  int target_resolution = 32;
  /// Indices into the input layer list.
  std::vector<std::size_t> members;
};

struct FusionPlan {
  int d_reduce = 128;
  /// Nonempty groups only, high to low.
  std::vector<FusionGroup> groups;
  std::vector<Stage> stages;
  TensorShape output;
  /// Largest single stage output, mix-conv excluded.
  std::uint64_t peak_elements = 0;
  /// Largest inputs-plus-outputs footprint of a stage, mix-conv excluded.
  std::uint64_t peak_live_elements = 0;
  std::uint64_t mix_conv_macs = 0;
};

inline constexpr int kDefaultReduce = 128;
inline constexpr int kFinalResolution = 512;

/// Per group: resize members to the group target, 1x1-reduce each member
/// wider than d_reduce, upsample the previous group's result, concatenate,
/// mix (two 3x3 convs with a residual), and reduce back to d_reduce.
FusionPlan plan_grouped(const std::vector<LayerSpec>& layers, int d_reduce = kDefaultReduce);

/// Throws kInvalidArgument when shapes do not chain or a layer is missing.
void validate_plan(const FusionPlan& plan, const std::vector<LayerSpec>& layers);

/// Sum of channels times final_res^2.
std::uint64_t plan_baseline(const std::vector<LayerSpec>& layers, int final_res = kFinalResolution);

struct FusionReport {
  std::uint64_t baseline_elements = 0;
  std::uint64_t grouped_peak_elements = 0;
  std::uint64_t peak_live_elements = 0;
  double ratio = 0.0;
  std::uint64_t mix_conv_macs = 0;
  FusionPlan plan;
};

FusionReport compare(const std::vector<LayerSpec>& layers, int d_reduce = kDefaultReduce,
                     int final_res = kFinalResolution);

std::string format_report(const FusionReport& report);

/// `name \t resolution \t channels` per line; '#' lines and blanks skipped.
std::vector<LayerSpec> parse_layers(std::string_view text, std::string_view source = "layers");
std::vector<LayerSpec> read_layers(const std::filesystem::path& path);
std::string format_layers(const std::vector<LayerSpec>& layers);

/// Example channel schedules; not taken from any released checkpoint.
std::vector<LayerSpec> biggan512_example_layers();
std::vector<LayerSpec> vqgan_example_layers();

}  // namespace labelgen::fusion
