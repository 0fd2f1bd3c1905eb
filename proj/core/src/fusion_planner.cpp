#include "labelgen/fusion_planner.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <optional>
#include <sstream>

#include "labelgen/error.hpp"
#include "labelgen/formats.hpp"

namespace labelgen::fusion {

namespace {

constexpr std::array<GroupLevel, 3> kLevels{GroupLevel::kHigh, GroupLevel::kMid, GroupLevel::kLow};

std::string shape_text(const TensorShape& s) {
  return std::to_string(s.channels) + "@" + std::to_string(s.resolution);
}

}  // namespace

void LayerSpec::validate() const {
  if (resolution < 8 || resolution > 512 || !std::has_single_bit(static_cast<unsigned>(resolution))) {
    throw Error(ErrorKind::kInvalidArgument,
                "layer '" + name + "': resolution " + std::to_string(resolution) +
                    " is not a power of two in [8, 512]");
  }
  if (channels < 1) {
    throw Error(ErrorKind::kInvalidArgument, "layer '" + name + "': channels must be >= 1");
  }
}

std::string_view to_string(GroupLevel level) noexcept {
  switch (level) {
    case GroupLevel::kHigh: return "high";
    case GroupLevel::kMid: return "mid";
    case GroupLevel::kLow: return "low";
  }
  return "high";
}

std::string_view to_string(StageKind kind) noexcept {
  switch (kind) {
    case StageKind::kResize: return "resize";
    case StageKind::kReduce: return "reduce";
    case StageKind::kUpsample: return "upsample";
    case StageKind::kConcat: return "concat";
    case StageKind::kMixConv: return "mix-conv";
    case StageKind::kFuseReduce: return "fuse-reduce";
  }
  return "resize";
}

GroupLevel group_of(int resolution) {
  if (resolution >= 8 && resolution <= 32) return GroupLevel::kHigh;
  if (resolution >= 64 && resolution <= 128) return GroupLevel::kMid;
  if (resolution >= 256 && resolution <= 512) return GroupLevel::kLow;
  throw Error(ErrorKind::kInvalidArgument,
              "resolution " + std::to_string(resolution) + " falls outside every group");
}

int group_target(GroupLevel level) noexcept {
  switch (level) {
    case GroupLevel::kHigh: return 32;
    case GroupLevel::kMid: return 128;
    case GroupLevel::kLow: return 512;
  }
  return 32;
}

std::uint64_t Stage::live_elements() const noexcept {
  if (zero_copy) return output.elements();
  std::uint64_t total = output.elements();
  for (const auto& in : inputs) total += in.elements();
  return total;
}

FusionPlan plan_grouped(const std::vector<LayerSpec>& layers, int d_reduce) {
  if (layers.empty()) throw Error(ErrorKind::kEmptyInput, "no layers to plan");
  if (d_reduce < 1) throw Error(ErrorKind::kInvalidArgument, "d_reduce must be >= 1");
  for (const auto& l : layers) l.validate();

  FusionPlan plan;
  plan.d_reduce = d_reduce;
  for (GroupLevel level : kLevels) {
    FusionGroup g{level, group_target(level), {}};
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (group_of(layers[i].resolution) == level) g.members.push_back(i);
    }
    if (!g.members.empty()) plan.groups.push_back(std::move(g));
  }

  std::optional<TensorShape> previous;
  for (const auto& g : plan.groups) {
    const int t = g.target_resolution;
    std::vector<TensorShape> parts;
    for (std::size_t i : g.members) {
      const auto& l = layers[i];
      TensorShape cur{l.channels, l.resolution};
      if (cur.resolution != t) {
        const TensorShape out{cur.channels, t};
        plan.stages.push_back({StageKind::kResize, g.level, l.name, {cur}, out, false, 0});
        cur = out;
      }
      if (cur.channels > d_reduce) {
        const TensorShape out{d_reduce, t};
        const auto macs = static_cast<std::uint64_t>(cur.channels) * out.elements();
        plan.stages.push_back({StageKind::kReduce, g.level, l.name, {cur}, out, false, macs});
        cur = out;
      }
      parts.push_back(cur);
    }
    if (previous) {
      const TensorShape out{previous->channels, t};
      plan.stages.push_back(
          {StageKind::kUpsample, g.level, "previous", {*previous}, out, false, 0});
      parts.push_back(out);
    }
    TensorShape cat{0, t};
    for (const auto& p : parts) cat.channels += p.channels;
    plan.stages.push_back({StageKind::kConcat, g.level, "concat", parts, cat, true, 0});

    const std::uint64_t mix_macs = 2ULL * 9ULL * static_cast<std::uint64_t>(cat.channels) *
                                   static_cast<std::uint64_t>(cat.channels) *
                                   static_cast<std::uint64_t>(t) * static_cast<std::uint64_t>(t);
    plan.stages.push_back({StageKind::kMixConv, g.level, "mix", {cat}, cat, false, mix_macs});
    plan.mix_conv_macs += mix_macs;

    TensorShape fused = cat;
    if (cat.channels > d_reduce) {
      fused = TensorShape{d_reduce, t};
      const auto macs = static_cast<std::uint64_t>(cat.channels) * fused.elements();
      plan.stages.push_back({StageKind::kFuseReduce, g.level, "fuse", {cat}, fused, false, macs});
    }
    previous = fused;
  }
  plan.output = *previous;

  for (const auto& s : plan.stages) {
    if (s.kind == StageKind::kMixConv) continue;
    plan.peak_elements = std::max(plan.peak_elements, s.output.elements());
    plan.peak_live_elements = std::max(plan.peak_live_elements, s.live_elements());
  }
  return plan;
}

void validate_plan(const FusionPlan& plan, const std::vector<LayerSpec>& layers) {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::kInvalidArgument, "invalid plan: " + what); };

  std::vector<int> seen(layers.size(), 0);
  for (const auto& g : plan.groups) {
    if (g.target_resolution != group_target(g.level)) fail("group target mismatch");
    for (std::size_t i : g.members) {
      if (i >= layers.size()) fail("member index out of range");
      if (group_of(layers[i].resolution) != g.level) fail("layer '" + layers[i].name + "' in wrong group");
      ++seen[i];
    }
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (seen[i] != 1) fail("layer '" + layers[i].name + "' is not in exactly one group");
  }

  int last_res = 0;
  for (const auto& s : plan.stages) {
    if (s.output.resolution < last_res) fail("stage resolution decreases at " + s.label);
    last_res = s.output.resolution;
    switch (s.kind) {
      case StageKind::kResize:
      case StageKind::kUpsample:
        if (s.inputs.size() != 1 || s.inputs[0].channels != s.output.channels ||
            s.inputs[0].resolution >= s.output.resolution) {
          fail(std::string(to_string(s.kind)) + " shape mismatch at " + s.label);
        }
        break;
      case StageKind::kReduce:
      case StageKind::kFuseReduce:
        if (s.inputs.size() != 1 || s.inputs[0].resolution != s.output.resolution ||
            s.output.channels != plan.d_reduce || s.inputs[0].channels <= plan.d_reduce) {
          fail(std::string(to_string(s.kind)) + " shape mismatch at " + s.label);
        }
        break;
      case StageKind::kConcat: {
        int sum = 0;
        for (const auto& in : s.inputs) {
          if (in.resolution != s.output.resolution) fail("concat resolution mismatch");
          sum += in.channels;
        }
        if (sum != s.output.channels) fail("concat channel mismatch");
        break;
      }
      case StageKind::kMixConv:
        if (s.inputs.size() != 1 || !(s.inputs[0] == s.output)) fail("mix-conv is not shape preserving");
        break;
    }
  }
  if (plan.stages.empty() || !(plan.stages.back().output == plan.output)) fail("plan output mismatch");
}

std::uint64_t plan_baseline(const std::vector<LayerSpec>& layers, int final_res) {
  if (final_res < 1) throw Error(ErrorKind::kInvalidArgument, "final resolution must be >= 1");
  std::uint64_t channels = 0;
  for (const auto& l : layers) {
    l.validate();
    channels += static_cast<std::uint64_t>(l.channels);
  }
  return channels * static_cast<std::uint64_t>(final_res) * static_cast<std::uint64_t>(final_res);
}

FusionReport compare(const std::vector<LayerSpec>& layers, int d_reduce, int final_res) {
  FusionReport r;
  r.plan = plan_grouped(layers, d_reduce);
  validate_plan(r.plan, layers);
  r.baseline_elements = plan_baseline(layers, final_res);
  r.grouped_peak_elements = r.plan.peak_elements;
  r.peak_live_elements = r.plan.peak_live_elements;
  r.mix_conv_macs = r.plan.mix_conv_macs;
  r.ratio = static_cast<double>(r.baseline_elements) / static_cast<double>(r.grouped_peak_elements);
  return r;
}

std::string format_report(const FusionReport& report) {
  std::ostringstream out;
  out << "# stage\tgroup\tkind\tlabel\tinputs\toutput\telements\n";
  std::size_t n = 0;
  for (const auto& s : report.plan.stages) {
    out << "stage\t" << n++ << '\t' << to_string(s.group) << '\t' << to_string(s.kind) << '\t'
        << s.label << '\t';
    for (std::size_t i = 0; i < s.inputs.size(); ++i) out << (i ? "+" : "") << shape_text(s.inputs[i]);
    out << '\t' << shape_text(s.output) << '\t' << s.output.elements() << '\n';
  }
  out << "d_reduce\t" << report.plan.d_reduce << '\n';
  out << "output\t" << shape_text(report.plan.output) << '\n';
  out << "baseline_elements\t" << report.baseline_elements << '\n';
  out << "grouped_peak_elements\t" << report.grouped_peak_elements << '\n';
  out << "peak_live_elements\t" << report.peak_live_elements << '\n';
  out << "ratio\t" << formats::format_fixed(report.ratio, 4) << '\n';
  out << "mix_conv_macs\t" << report.mix_conv_macs << '\n';
  return out.str();
}

std::vector<LayerSpec> parse_layers(std::string_view text, std::string_view source) {
  std::vector<LayerSpec> layers;
  std::size_t line_no = 0;
  for (std::string_view line : formats::split(text, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    const std::string where = std::string(source) + ":" + std::to_string(line_no) + ": ";
    const auto fields = formats::split(line, '\t');
    if (fields.size() != 3) {
      throw Error(ErrorKind::kParse, where + "expected name<TAB>resolution<TAB>channels");
    }
    LayerSpec l;
    l.name = std::string(fields[0]);
    try {
      l.resolution = static_cast<int>(formats::parse_int(fields[1]));
      l.channels = static_cast<int>(formats::parse_int(fields[2]));
      l.validate();
    } catch (const Error& e) {
      throw Error(ErrorKind::kParse, where + e.what());
    }
    layers.push_back(std::move(l));
  }
  return layers;
}

std::vector<LayerSpec> read_layers(const std::filesystem::path& path) {
  return parse_layers(formats::read_text_file(path), path.string());
}

std::string format_layers(const std::vector<LayerSpec>& layers) {
  std::string out;
  for (const auto& l : layers) {
    out += l.name + '\t' + std::to_string(l.resolution) + '\t' + std::to_string(l.channels) + '\n';
  }
  return out;
}

std::vector<LayerSpec> biggan512_example_layers() {
  return {{"g8", 8, 1536},     {"g16", 16, 1536},      {"g32", 32, 768},  {"g64", 64, 384},
          {"g128", 128, 192},  {"g128_attn", 128, 96}, {"g256", 256, 96}, {"g512", 512, 48}};
}

std::vector<LayerSpec> vqgan_example_layers() {
  std::vector<LayerSpec> layers;
  for (int i = 0; i < 12; ++i) {
    layers.push_back({"transformer" + std::to_string(4 * i + 3), 16, 1536});
  }
  layers.push_back({"dec16", 16, 512});
  layers.push_back({"dec32", 32, 512});
  layers.push_back({"dec64", 64, 256});
  layers.push_back({"dec128", 128, 256});
  layers.push_back({"dec256a", 256, 128});
  layers.push_back({"dec256b", 256, 128});
  layers.push_back({"dec256c", 256, 128});
  return layers;
}

}  // namespace labelgen::fusion
