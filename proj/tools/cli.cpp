#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>

#include "labelgen/analysis.hpp"
#include "labelgen/dist_metrics.hpp"
#include "labelgen/error.hpp"
#include "labelgen/formats.hpp"
#include "labelgen/fusion_planner.hpp"
#include "labelgen/geometry.hpp"
#include "labelgen/pipeline.hpp"
#include "labelgen/sampling.hpp"
#include "labelgen/segbench.hpp"

namespace labelgen::cli {

namespace {

constexpr const char* kDefaultsFooter =
    "Defaults: truncation psi 0.9, rejection rate 0.9, nucleus p 0.92 / top-k 200,\n"
    "uncertainty fraction 0.10, simplification epsilon 0.01, mean-shape k 5.\n"
    "LABELGEN_SEED overrides the default seed 0.";

struct SourceOptions {
  int classes = 16;
  int resolution = 64;
  std::uint64_t seed = 0;
};

void add_source_options(CLI::App* cmd, std::string& source, SourceOptions& opts) {
  cmd->add_option("--source", source, "Sample source")->check(CLI::IsMember({"toy"}));
  cmd->add_option("--classes", opts.classes, "Toy taxonomy size")->check(CLI::Range(4, 1000));
  cmd->add_option("--resolution", opts.resolution, "Toy image side")
      ->check(CLI::IsMember({64, 128, 256}));
  cmd->add_option("--seed", opts.seed, "Root seed");
}

/// Writes to `path`, or to `out` when the path is empty.
void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
  } else {
    formats::write_text_file(path, text);
  }
}

struct FilterFlags {
  std::string config;
  double truncation = sampling::FilterConfig{}.truncation_psi;
  double rejection = sampling::FilterConfig{}.rejection_rate;
  double uncertainty = sampling::FilterConfig{}.uncertainty_fraction;
  double nucleus_p = sampling::FilterConfig{}.nucleus_p;
  int top_k = sampling::FilterConfig{}.top_k;
};

void add_filter_options(CLI::App* cmd, FilterFlags& f, bool with_uncertainty) {
  cmd->add_option("--config", f.config, "key=value filter file; flags given explicitly win");
  cmd->add_option("--truncation", f.truncation, "Truncation psi");
  cmd->add_option("--rejection", f.rejection, "Confidence rejection rate (0 disables)");
  if (with_uncertainty) {
    cmd->add_option("--uncertainty", f.uncertainty, "Ensemble uncertainty filter fraction (0 disables)");
  }
  cmd->add_option("--nucleus-p", f.nucleus_p, "Nucleus mass p (recorded for token sources)");
  cmd->add_option("--top-k", f.top_k, "Top-k cut (recorded for token sources)");
}

sampling::FilterConfig resolve_filters(const CLI::App* cmd, const FilterFlags& f, bool with_uncertainty) {
  sampling::FilterConfig cfg;
  if (!f.config.empty()) cfg = sampling::read_filter_config(f.config);
  if (f.config.empty() || cmd->count("--truncation")) cfg.truncation_psi = f.truncation;
  if (f.config.empty() || cmd->count("--rejection")) cfg.rejection_rate = f.rejection;
  if (f.config.empty() || cmd->count("--nucleus-p")) cfg.nucleus_p = f.nucleus_p;
  if (f.config.empty() || cmd->count("--top-k")) cfg.top_k = f.top_k;
  if (!with_uncertainty) {
    cfg.uncertainty_fraction = 0.0;
  } else if (f.config.empty() || cmd->count("--uncertainty")) {
    cfg.uncertainty_fraction = f.uncertainty;
  }
  cfg.validate();
  return cfg;
}

std::unique_ptr<pipeline::ToySource> make_source(const SourceOptions& s, double psi) {
  pipeline::ToySourceConfig cfg;
  cfg.num_classes = s.classes;
  cfg.resolution = s.resolution;
  cfg.seed = s.seed;
  cfg.truncation_psi = psi;
  return std::make_unique<pipeline::ToySource>(cfg);
}

std::optional<double> fid_of(const std::string& a, const std::string& b) {
  if (a.empty() || b.empty()) return std::nullopt;
  return metrics::fid(formats::read_embeddings(a), formats::read_embeddings(b));
}

std::optional<double> kid_of(const std::string& a, const std::string& b) {
  if (a.empty() || b.empty()) return std::nullopt;
  return metrics::kid(formats::read_embeddings(a), formats::read_embeddings(b));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::uint64_t default_seed = 0;
  if (const char* env = std::getenv("LABELGEN_SEED"); env != nullptr && *env != '\0') {
    try {
      default_seed = formats::parse_uint(env);
    } catch (const Error&) {
      err << "labelgen: LABELGEN_SEED is not an unsigned integer: " << env << '\n';
      return kExitUsage;
    }
  }

  CLI::App app{"Labeled dataset synthesis, analysis and benchmarking", "labelgen"};
  app.footer(kDefaultsFooter);
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  // synth
  std::string synth_source = "toy";
  SourceOptions synth_src{16, 64, default_seed};
  FilterFlags synth_filters;
  std::size_t synth_n = 1000;
  int synth_workers = 1;
  std::string synth_out, synth_name = "toy";
  auto* synth = app.add_subcommand("synth", "Generate an offline labeled dataset");
  add_source_options(synth, synth_source, synth_src);
  add_filter_options(synth, synth_filters, true);
  synth->add_option("--n", synth_n, "Samples to keep")->check(CLI::PositiveNumber);
  synth->add_option("--workers", synth_workers, "Generation threads")->check(CLI::PositiveNumber);
  synth->add_option("--name", synth_name, "Dataset name");
  synth->add_option("--out", synth_out, "Output directory")->required();

  // stream
  std::string stream_source = "toy";
  SourceOptions stream_src{16, 64, default_seed};
  FilterFlags stream_filters;
  std::size_t stream_count = 100;
  std::string stream_out, stream_name = "toy-stream";
  auto* stream = app.add_subcommand("stream", "Pull never-repeating samples from an online stream");
  add_source_options(stream, stream_source, stream_src);
  add_filter_options(stream, stream_filters, false);
  stream->add_option("--count", stream_count, "Samples to pull");
  stream->add_option("--name", stream_name, "Dataset name");
  stream->add_option("--out", stream_out, "Output directory")->required();

  // analyze
  std::string an_manifest, an_report, img_a, img_b, lbl_a, lbl_b;
  analysis::AnalysisOptions an_opts;
  auto* analyze = app.add_subcommand("analyze", "Dataset statistics table");
  analyze->add_option("--manifest", an_manifest, "Dataset manifest")->required();
  analyze->add_option("--epsilon", an_opts.epsilon, "Polygon simplification tolerance");
  analyze->add_option("--min-pixels", an_opts.min_pixels, "Smallest component given a polygon");
  analyze->add_option("--image-emb", img_a, "EMB1 embeddings of this dataset's masked images");
  analyze->add_option("--image-ref", img_b, "EMB1 reference embeddings for image quality");
  analyze->add_option("--label-emb", lbl_a, "EMB1 embeddings of this dataset's labels");
  analyze->add_option("--label-ref", lbl_b, "EMB1 reference embeddings for label quality");
  analyze->add_option("--report", an_report, "Write the report here instead of stdout");

  // geometry
  std::string geo_manifest, geo_out;
  analysis::AnalysisOptions geo_opts;
  auto* geometry_cmd = app.add_subcommand("geometry", "Simplified polygons and PL/SC/SD");
  geometry_cmd->add_option("--manifest", geo_manifest, "Dataset manifest")->required();
  geometry_cmd->add_option("--epsilon", geo_opts.epsilon, "Polygon simplification tolerance");
  geometry_cmd->add_option("--min-pixels", geo_opts.min_pixels, "Smallest component given a polygon");
  geometry_cmd->add_option("--out", geo_out, "Polygon file (class_id<TAB>x,y;...)");

  // meanshapes
  std::string ms_manifest, ms_out;
  int ms_k = geometry::kMeanShapeClusters;
  std::uint64_t ms_seed = default_seed;
  std::vector<int> ms_classes;
  auto* meanshapes = app.add_subcommand("meanshapes", "Per-class k-means mean shapes");
  meanshapes->add_option("--manifest", ms_manifest, "Dataset manifest")->required();
  meanshapes->add_option("--k", ms_k, "Clusters per class")->check(CLI::PositiveNumber);
  meanshapes->add_option("--seed", ms_seed, "k-means++ seed");
  meanshapes->add_option("--class", ms_classes, "Restrict to these class ids");
  meanshapes->add_option("--out", ms_out, "Output file");

  // distmetrics
  std::string dm_a, dm_b, dm_out;
  std::size_t dm_block = 0;
  auto* distmetrics = app.add_subcommand("distmetrics", "FID and KID between two embedding files");
  distmetrics->add_option("--a", dm_a, "First EMB1 file")->required();
  distmetrics->add_option("--b", dm_b, "Second EMB1 file")->required();
  distmetrics->add_option("--kid-block", dm_block, "Also report block-averaged KID (0 = off)");
  distmetrics->add_option("--report", dm_out, "Output file");

  // plan
  std::string plan_layers, plan_example, plan_out;
  int plan_d = fusion::kDefaultReduce;
  int plan_final = fusion::kFinalResolution;
  auto* plan = app.add_subcommand("plan", "Grouped fusion memory plan versus resize-all baseline");
  auto* layers_opt = plan->add_option("--layers", plan_layers, "name<TAB>resolution<TAB>channels file");
  plan->add_option("--example", plan_example, "Built-in layer schedule")
      ->check(CLI::IsMember({"biggan512", "vqgan"}))
      ->excludes(layers_opt);
  plan->add_option("--d-reduce", plan_d, "1x1 reduction width")->check(CLI::PositiveNumber);
  plan->add_option("--final-res", plan_final, "Baseline output resolution")->check(CLI::PositiveNumber);
  plan->add_option("--report", plan_out, "Output file");

  // bench
  std::string b_task, b_pred, b_gt, b_tax, b_report, b_background = "default";
  std::size_t b_rank = 5;
  auto* bench = app.add_subcommand("bench", "mIoU of predicted masks against ground truth");
  bench->add_option("--task", b_task, "Task name in the taxonomy")->required();
  bench->add_option("--pred-manifest", b_pred, "Prediction manifest")->required();
  bench->add_option("--gt-manifest", b_gt, "Ground-truth manifest")->required();
  bench->add_option("--taxonomy", b_tax, "LGTAXv1 taxonomy file")->required();
  bench->add_option("--background", b_background, "Count background as a class")
      ->check(CLI::IsMember({"default", "include", "exclude"}));
  bench->add_option("--rank", b_rank, "Best/worst entries to list");
  bench->add_option("--report", b_report, "Output file");

  // scatter
  std::string sc_manifest, sc_out;
  auto* scatter = app.add_subcommand("scatter", "Normalized bbox centers, one cx<TAB>cy line per sample");
  scatter->add_option("--manifest", sc_manifest, "Dataset manifest")->required();
  scatter->add_option("--out", sc_out, "Output file");

  std::vector<const char*> argv{"labelgen"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth->parsed()) {
      const auto cfg = resolve_filters(synth, synth_filters, true);
      const auto source = make_source(synth_src, cfg.truncation_psi);
      pipeline::PipelineSpec spec;
      spec.filters = cfg;
      spec.mode = pipeline::Mode::kOffline;
      spec.count = synth_n;
      spec.output_dir = synth_out;
      spec.dataset_name = synth_name;
      spec.workers = synth_workers;
      const auto result = pipeline::synth_offline(*source, spec);
      formats::write_taxonomy(source->taxonomy().taxonomy,
                              std::filesystem::path(synth_out) / "taxonomy.tsv");
      out << "pool\t" << result.candidates.size() << "\nkept\t" << result.manifest.entries.size()
          << "\nmanifest\t"
          << (std::filesystem::path(synth_out) / std::string(pipeline::kManifestFileName)).string()
          << '\n';
    } else if (stream->parsed()) {
      const auto cfg = resolve_filters(stream, stream_filters, false);
      const auto source = make_source(stream_src, cfg.truncation_psi);
      pipeline::PipelineSpec spec;
      spec.filters = cfg;
      spec.mode = pipeline::Mode::kOnline;
      spec.count = stream_count;
      spec.output_dir = stream_out;
      spec.dataset_name = stream_name;
      const auto manifest = pipeline::synth_online(*source, spec);
      formats::write_taxonomy(source->taxonomy().taxonomy,
                              std::filesystem::path(stream_out) / "taxonomy.tsv");
      out << "pulled\t" << manifest.entries.size() << "\ncandidates\t"
          << manifest.metadata_value("candidates").value_or("-") << '\n';
    } else if (analyze->parsed()) {
      auto report = analysis::analyze_manifest(an_manifest, an_opts);
      report.image_quality = {fid_of(img_a, img_b), kid_of(img_a, img_b)};
      report.label_quality = {fid_of(lbl_a, lbl_b), kid_of(lbl_a, lbl_b)};
      emit(an_report, analysis::format_report(report), out);
    } else if (geometry_cmd->parsed()) {
      const auto manifest = formats::read_manifest(geo_manifest);
      if (manifest.entries.empty()) throw Error(ErrorKind::kEmptyInput, "empty dataset");
      std::vector<std::pair<int, geometry::Polygon>> polys;
      std::size_t degenerate = 0;
      for (const auto& m : analysis::load_masks(geo_manifest)) {
        auto p = analysis::sample_polygon(m.mask, geo_opts);
        if (!p) continue;
        if (p->degenerate) {
          ++degenerate;
          continue;
        }
        polys.emplace_back(m.class_id, std::move(p->polygon));
      }
      if (!geo_out.empty()) formats::write_text_file(geo_out, geometry::format_polygons(polys));
      const auto report = analysis::analyze_manifest(geo_manifest, geo_opts);
      out << "polygons\t" << polys.size() << "\ndegenerate\t" << degenerate << "\nPL\t"
          << (report.polygon_length ? formats::format_real(*report.polygon_length) : "-") << "\nSC\t"
          << (report.shape_complexity ? formats::format_real(*report.shape_complexity) : "-")
          << "\nSD\t"
          << (report.shape_diversity ? formats::format_real(*report.shape_diversity) : "-") << '\n';
    } else if (meanshapes->parsed()) {
      std::map<int, std::vector<Mask>> by_class;
      for (auto& m : analysis::load_masks(ms_manifest)) {
        if (!ms_classes.empty() &&
            std::find(ms_classes.begin(), ms_classes.end(), m.class_id) == ms_classes.end()) {
          continue;
        }
        if (m.mask.foreground_count() > 0) by_class[m.class_id].push_back(std::move(m.mask));
      }
      std::vector<geometry::MeanShapeSet> sets;
      std::string skipped;
      for (const auto& [cls, masks] : by_class) {
        if (masks.size() < static_cast<std::size_t>(ms_k)) {
          skipped += "# skipped\t" + std::to_string(cls) + '\t' + std::to_string(masks.size()) + '\n';
          continue;
        }
        sets.push_back(geometry::mean_shapes(masks, ms_k, ms_seed, cls));
      }
      if (sets.empty()) throw Error(ErrorKind::kEmptyInput, "no class has enough masks for k clusters");
      emit(ms_out, skipped + analysis::format_mean_shapes(sets), out);
    } else if (distmetrics->parsed()) {
      const auto a = formats::read_embeddings(dm_a);
      const auto b = formats::read_embeddings(dm_b);
      const double k = metrics::kid(a, b);
      std::string text = "fid\t" + formats::format_real(metrics::fid(a, b)) + "\nkid\t" +
                         formats::format_real(k) + "\nkid_x1000\t" + formats::format_real(k * 1000.0) +
                         '\n';
      if (dm_block > 0) {
        text += "kid_block\t" + formats::format_real(metrics::kid_blocked(a, b, dm_block)) + '\n';
      }
      emit(dm_out, text, out);
    } else if (plan->parsed()) {
      std::vector<fusion::LayerSpec> layers;
      if (!plan_layers.empty()) {
        layers = fusion::read_layers(plan_layers);
      } else if (plan_example == "vqgan") {
        layers = fusion::vqgan_example_layers();
      } else if (plan_example == "biggan512") {
        layers = fusion::biggan512_example_layers();
      } else {
        throw Error(ErrorKind::kInvalidArgument, "plan needs --layers or --example");
      }
      emit(plan_out, fusion::format_report(fusion::compare(layers, plan_d, plan_final)), out);
    } else if (bench->parsed()) {
      const auto taxonomy = formats::read_taxonomy(b_tax);
      std::optional<bool> background;
      if (b_background != "default") background = b_background == "include";
      const auto result = segbench::run_bench(b_pred, b_gt, taxonomy, b_task, b_rank, background);
      emit(b_report, segbench::format_bench_report(result, taxonomy), out);
    } else if (scatter->parsed()) {
      std::vector<Mask> masks;
      for (auto& m : analysis::load_masks(sc_manifest)) masks.push_back(std::move(m.mask));
      emit(sc_out, analysis::format_scatter(geometry::center_scatter(masks)), out);
    }
  } catch (const Error& e) {
    err << "labelgen: " << e.what() << '\n';
    return e.kind() == ErrorKind::kInvalidArgument ? kExitUsage : kExitData;
  } catch (const std::exception& e) {
    err << "labelgen: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace labelgen::cli
