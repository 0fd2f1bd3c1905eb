#include "labelgen/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <thread>

#include "labelgen/error.hpp"
#include "labelgen/formats.hpp"
#include "labelgen/rng.hpp"

namespace labelgen::pipeline {

namespace {

constexpr std::uint64_t kClassStream = 0;
constexpr std::uint64_t kLatentStream = 1;
constexpr std::uint64_t kSeedStream = 2;

/// Runs fn(i) for i in [begin, end) on up to `workers` threads, each owning a
/// contiguous slice.
template <typename Fn>
void parallel_for(std::size_t begin, std::size_t end, int workers, Fn&& fn) {
  const std::size_t n = end - begin;
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n);
  if (threads <= 1) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        const std::size_t lo = begin + t * chunk;
        const std::size_t hi = std::min(end, lo + chunk);
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

SampleRecord record_of(const LabeledSample& sample) {
  SampleRecord r;
  r.id = sample.id;
  r.class_id = sample.class_id;
  r.image_path = image_relpath(sample.id);
  r.mask_path = mask_relpath(sample.id);
  r.provenance = sample.provenance;
  r.latent_seed = sample.latent_seed;
  r.confidence = sample.confidence;
  r.uncertainty = sample.uncertainty;
  return r;
}

void write_sample_files(const LabeledSample& sample, const std::filesystem::path& dir) {
  formats::write_image(sample.image, dir / image_relpath(sample.id));
  formats::write_mask(sample.mask, dir / mask_relpath(sample.id));
}

void prepare_output(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "images", ec);
  if (!ec) std::filesystem::create_directories(dir / "masks", ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create output directory '" + dir.string() + "': " + ec.message());
}

DatasetManifest base_manifest(const SampleSource& source, const PipelineSpec& spec,
                              std::string_view mode) {
  DatasetManifest m;
  m.name = spec.dataset_name;
  m.set_metadata("source", std::string(source.name()));
  m.set_metadata("mode", std::string(mode));
  m.set_metadata("truncation_psi", formats::format_real(spec.filters.truncation_psi));
  m.set_metadata("rejection_rate", formats::format_real(spec.filters.rejection_rate));
  m.set_metadata("nucleus_p", formats::format_real(spec.filters.nucleus_p));
  m.set_metadata("top_k", std::to_string(spec.filters.top_k));
  m.set_metadata("uncertainty_fraction", formats::format_real(spec.filters.uncertainty_fraction));
  for (auto& [k, v] : source.describe()) m.set_metadata("source." + k, v);
  return m;
}

}  // namespace

ToySource::ToySource(ToySourceConfig config)
    : config_(config), taxonomy_(toy::toy_taxonomy(config.num_classes, config.seed)) {
  if (!(config_.truncation_psi > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "truncation psi must be > 0");
  }
  if (config_.latent_dim == 0) throw Error(ErrorKind::kInvalidArgument, "latent dim must be >= 1");
}

SourceDraw ToySource::draw(std::uint64_t counter, bool with_ensemble) const {
  const Rng root = Rng(config_.seed).substream(counter);
  Rng class_rng = root.substream(kClassStream);
  Rng latent_rng = root.substream(kLatentStream);
  Rng seed_rng = root.substream(kSeedStream);

  const auto& spec =
      taxonomy_.specs[static_cast<std::size_t>(class_rng.below(taxonomy_.specs.size()))];
  const auto z = sampling::truncated_normal(config_.latent_dim, config_.truncation_psi, latent_rng);
  const std::uint64_t sample_seed = seed_rng.next_u64();

  toy::ToyOptions options;
  options.with_ensemble = with_ensemble;
  toy::ToyOutput out = toy::toy_generate(spec, z, sample_seed, config_.resolution, options);

  SourceDraw draw;
  draw.sample.id = sample_id(counter);
  draw.sample.class_id = spec.class_id;
  draw.sample.image = std::move(out.image);
  draw.sample.mask = std::move(out.gt_mask);
  draw.sample.latent_seed = sample_seed;
  draw.sample.provenance = Provenance::kToy;
  draw.sample.confidence = out.confidence;
  draw.ensemble = std::move(out.ensemble);
  draw.confidence = out.confidence;
  draw.injected_disagreement = out.disagreement;
  return draw;
}

std::vector<std::pair<std::string, std::string>> ToySource::describe() const {
  return {{"num_classes", std::to_string(config_.num_classes)},
          {"truncation_psi", formats::format_real(config_.truncation_psi)},
          {"resolution", std::to_string(config_.resolution)},
          {"seed", std::to_string(config_.seed)},
          {"latent_dim", std::to_string(config_.latent_dim)}};
}

std::string sample_id(std::uint64_t counter) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "toy-%012llu", static_cast<unsigned long long>(counter));
  return buf;
}

std::string image_relpath(std::string_view id) { return "images/" + std::string(id) + ".ppm"; }
std::string mask_relpath(std::string_view id) { return "masks/" + std::string(id) + ".pgm"; }

void PipelineSpec::validate() const {
  filters.validate();
  if (mode == Mode::kOffline && count == 0) {
    throw Error(ErrorKind::kInvalidArgument, "offline synthesis needs n >= 1");
  }
  if (mode == Mode::kOnline && filters.uncertainty_fraction > 0.0) {
    throw Error(ErrorKind::kInvalidArgument,
                "online mode does not run the ensemble uncertainty stage; set its fraction to 0");
  }
  if (workers < 1) throw Error(ErrorKind::kInvalidArgument, "workers must be >= 1");
}

std::size_t candidate_pool_size(std::size_t n, double rejection_rate, double uncertainty_fraction) {
  return sampling::ceil_count(static_cast<double>(n) /
                              ((1.0 - rejection_rate) * (1.0 - uncertainty_fraction)));
}

SynthResult synth_offline(const SampleSource& source, const PipelineSpec& spec) {
  if (spec.mode != Mode::kOffline) throw Error(ErrorKind::kInvalidArgument, "spec is not offline");
  spec.validate();
  const double rate = spec.filters.rejection_rate;
  const double fraction = spec.filters.uncertainty_fraction;

  SynthResult result;
  result.initial_pool = candidate_pool_size(spec.count, rate, fraction);
  std::size_t pool = result.initial_pool;
  auto& cands = result.candidates;
  std::vector<std::size_t> survivors;

  for (;;) {
    const std::size_t have = cands.size();
    cands.resize(pool);
    parallel_for(have, pool, spec.workers, [&](std::size_t i) {
      SourceDraw d = source.draw(i, false);
      if (!d.confidence) {
        throw Error(ErrorKind::kMissingField, "source gave no confidence for " + d.sample.id);
      }
      cands[i].counter = i;
      cands[i].id = d.sample.id;
      cands[i].confidence = *d.confidence;
      cands[i].injected_disagreement = d.injected_disagreement;
    });

    std::vector<sampling::ScoredId> by_confidence;
    by_confidence.reserve(cands.size());
    for (const auto& c : cands) by_confidence.push_back({c.id, c.confidence});
    const auto passed = sampling::confidence_rejection(by_confidence, rate);
    for (auto& c : cands) c.passed_rejection = c.passed_uncertainty = false;
    for (std::size_t i : passed) cands[i].passed_rejection = true;

    if (fraction > 0.0) {
      std::vector<std::size_t> todo;
      for (std::size_t i : passed) {
        if (!cands[i].uncertainty) todo.push_back(i);
      }
      parallel_for(0, todo.size(), spec.workers, [&](std::size_t t) {
        const std::size_t i = todo[t];
        SourceDraw d = source.draw(i, true);
        if (!d.ensemble) throw Error(ErrorKind::kMissingField, "source gave no ensemble for " + d.sample.id);
        cands[i].uncertainty = sampling::sample_uncertainty(*d.ensemble);
      });
      std::vector<sampling::ScoredId> by_uncertainty;
      by_uncertainty.reserve(passed.size());
      for (std::size_t i : passed) by_uncertainty.push_back({cands[i].id, *cands[i].uncertainty});
      survivors.clear();
      for (std::size_t j : sampling::uncertainty_filter(by_uncertainty, fraction)) {
        survivors.push_back(passed[j]);
      }
    } else {
      survivors = passed;
    }
    for (std::size_t i : survivors) cands[i].passed_uncertainty = true;

    if (survivors.size() >= spec.count) break;
    pool += std::max<std::size_t>(1, sampling::ceil_count(kTopUpFraction * static_cast<double>(pool)));
  }
  survivors.resize(spec.count);

  result.manifest = base_manifest(source, spec, "offline");
  result.manifest.set_metadata("pool", std::to_string(cands.size()));
  if (!spec.output_dir.empty()) prepare_output(spec.output_dir);

  std::vector<SampleRecord> records(survivors.size());
  parallel_for(0, survivors.size(), spec.workers, [&](std::size_t j) {
    const std::size_t i = survivors[j];
    SourceDraw d = source.draw(i, false);
    d.sample.uncertainty = cands[i].uncertainty;
    records[j] = record_of(d.sample);
    if (!spec.output_dir.empty()) write_sample_files(d.sample, spec.output_dir);
  });
  for (std::size_t i : survivors) cands[i].kept = true;
  result.manifest.entries = std::move(records);
  if (!spec.output_dir.empty()) {
    formats::write_manifest(result.manifest, spec.output_dir / std::string(kManifestFileName));
  }
  return result;
}

OnlineStream::OnlineStream(const SampleSource& source, const PipelineSpec& spec) : source_(source) {
  spec.validate();
  const double rate = spec.filters.rejection_rate;
  if (rate <= 0.0) return;
  std::vector<double> warm(kWarmupSize);
  for (std::size_t i = 0; i < kWarmupSize; ++i) {
    const auto d = source_.draw(kWarmupCounterBase + i, false);
    if (!d.confidence) throw Error(ErrorKind::kMissingField, "source gave no confidence for " + d.sample.id);
    warm[i] = *d.confidence;
  }
  std::sort(warm.begin(), warm.end());
  const std::size_t rank = sampling::ceil_count(rate * static_cast<double>(kWarmupSize));
  threshold_ = warm[std::clamp<std::size_t>(rank, 1, kWarmupSize) - 1];
}

LabeledSample OnlineStream::next() {
  for (;;) {
    SourceDraw d = source_.draw(counter_++, false);
    if (!threshold_ || (d.confidence && *d.confidence > *threshold_)) return std::move(d.sample);
  }
}

DatasetManifest synth_online(const SampleSource& source, const PipelineSpec& spec) {
  if (spec.mode != Mode::kOnline) throw Error(ErrorKind::kInvalidArgument, "spec is not online");
  OnlineStream stream(source, spec);
  DatasetManifest manifest = base_manifest(source, spec, "online");
  if (stream.threshold()) {
    manifest.set_metadata("confidence_threshold", formats::format_real(*stream.threshold()));
  }
  if (!spec.output_dir.empty()) prepare_output(spec.output_dir);
  for (std::size_t i = 0; i < spec.count; ++i) {
    LabeledSample s = stream.next();
    manifest.entries.push_back(record_of(s));
    if (!spec.output_dir.empty()) write_sample_files(s, spec.output_dir);
  }
  manifest.set_metadata("candidates", std::to_string(stream.candidates_drawn()));
  if (!spec.output_dir.empty()) {
    formats::write_manifest(manifest, spec.output_dir / std::string(kManifestFileName));
  }
  return manifest;
}

}  // namespace labelgen::pipeline
