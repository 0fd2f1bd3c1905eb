#include "labelgen/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "labelgen/error.hpp"
#include "labelgen/formats.hpp"

namespace labelgen::sampling {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<ScoredId> scores_of(const std::vector<LabeledSample>& samples, bool uncertainty) {
  std::vector<ScoredId> scored;
  scored.reserve(samples.size());
  for (const auto& s : samples) {
    const auto& value = uncertainty ? s.uncertainty : s.confidence;
    if (!value) {
      throw Error(ErrorKind::kMissingField, "sample '" + s.id + "' has no " +
                                                (uncertainty ? "uncertainty" : "confidence") +
                                                " score");
    }
    scored.push_back(ScoredId{s.id, *value});
  }
  return scored;
}

std::vector<LabeledSample> select(std::vector<LabeledSample> samples,
                                  const std::vector<std::size_t>& kept) {
  std::vector<LabeledSample> out;
  out.reserve(kept.size());
  for (std::size_t i : kept) out.push_back(std::move(samples[i]));
  return out;
}

}  // namespace

void FilterConfig::validate() const {
  if (!(truncation_psi > 0.0)) throw Error(ErrorKind::kInvalidArgument, "truncation psi must be > 0");
  if (!(rejection_rate >= 0.0 && rejection_rate < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "rejection rate must lie in [0,1)");
  }
  if (!(uncertainty_fraction >= 0.0 && uncertainty_fraction < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "uncertainty fraction must lie in [0,1)");
  }
  if (!(nucleus_p > 0.0 && nucleus_p <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "nucleus p must lie in (0,1]");
  }
  if (top_k < 1) throw Error(ErrorKind::kInvalidArgument, "top-k must be >= 1");
}

FilterConfig parse_filter_config(std::string_view text, FilterConfig config) {
  std::size_t line_no = 0;
  for (std::string_view raw : formats::split(text, '\n')) {
    ++line_no;
    std::string_view line = raw.substr(0, raw.find('#'));
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "filter config:" + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos) throw Error(ErrorKind::kParse, where + "expected key=value");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    try {
      if (key == "truncation_psi") {
        config.truncation_psi = formats::parse_real(value);
      } else if (key == "rejection_rate") {
        config.rejection_rate = formats::parse_real(value);
      } else if (key == "nucleus_p") {
        config.nucleus_p = formats::parse_real(value);
      } else if (key == "top_k") {
        config.top_k = static_cast<int>(formats::parse_int(value));
      } else if (key == "uncertainty_fraction") {
        config.uncertainty_fraction = formats::parse_real(value);
      } else {
        throw Error(ErrorKind::kParse, "unknown key '" + std::string(key) + "'");
      }
    } catch (const Error& e) {
      throw Error(e.kind(), where + e.what());
    }
  }
  config.validate();
  return config;
}

FilterConfig read_filter_config(const std::filesystem::path& path, FilterConfig base) {
  return parse_filter_config(formats::read_text_file(path), base);
}

std::string format_filter_config(const FilterConfig& c) {
  return "truncation_psi=" + formats::format_real(c.truncation_psi) + "\n" +
         "rejection_rate=" + formats::format_real(c.rejection_rate) + "\n" +
         "nucleus_p=" + formats::format_real(c.nucleus_p) + "\n" +
         "top_k=" + std::to_string(c.top_k) + "\n" +
         "uncertainty_fraction=" + formats::format_real(c.uncertainty_fraction) + "\n";
}

CategoricalDist::CategoricalDist(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw Error(ErrorKind::kEmptyInput, "empty categorical distribution");
  double sum = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw Error(ErrorKind::kInvalidArgument, "categorical probabilities must be finite and >= 0");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorKind::kInvalidArgument, "categorical probabilities sum to " +
                                                 formats::format_real(sum));
  }
}

EnsemblePrediction::EnsemblePrediction(int heads, int width, int height, int classes,
                                       std::vector<double> probs)
    : heads_(heads), width_(width), height_(height), classes_(classes), probs_(std::move(probs)) {
  if (heads < 2 || width < 1 || height < 1 || classes < 1) {
    throw Error(ErrorKind::kInvalidArgument, "ensemble needs K >= 2 heads and a nonempty grid");
  }
  const std::size_t expected = static_cast<std::size_t>(heads) * static_cast<std::size_t>(width) *
                               static_cast<std::size_t>(height) * static_cast<std::size_t>(classes);
  if (probs_.size() != expected) {
    throw Error(ErrorKind::kSizeMismatch, "ensemble has " + std::to_string(probs_.size()) +
                                              " values, expected " + std::to_string(expected));
  }
}

void EnsemblePrediction::validate() const {
  for (std::size_t o = 0; o < probs_.size(); o += static_cast<std::size_t>(classes_)) {
    double sum = 0.0;
    for (int c = 0; c < classes_; ++c) {
      const double p = probs_[o + static_cast<std::size_t>(c)];
      if (!(p >= 0.0)) throw Error(ErrorKind::kInvalidArgument, "negative ensemble probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw Error(ErrorKind::kInvalidArgument, "ensemble pixel distribution does not sum to 1");
    }
  }
}

std::vector<double> truncated_normal(std::size_t dim, double psi, Rng& rng) {
  if (!(psi > 0.0)) throw Error(ErrorKind::kInvalidArgument, "truncation psi must be > 0");
  std::vector<double> z(dim);
  for (auto& v : z) {
    do {
      v = rng.normal();
    } while (std::abs(v) > psi);
  }
  return z;
}

NucleusSupport nucleus_topk_support(const CategoricalDist& dist, double p, std::size_t k) {
  if (!(p > 0.0 && p <= 1.0)) throw Error(ErrorKind::kInvalidArgument, "nucleus p must lie in (0,1]");
  if (k < 1) throw Error(ErrorKind::kInvalidArgument, "top-k must be >= 1");
  const auto probs = dist.probs();
  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });

  NucleusSupport support;
  double mass = 0.0;
  for (std::size_t i = 0; i < order.size() && i < k; ++i) {
    support.indices.push_back(order[i]);
    mass += probs[order[i]];
    if (mass >= p - 1e-12) break;
  }
  // Zero-probability entries can never be drawn; drop them from the support.
  while (support.indices.size() > 1 && probs[support.indices.back()] == 0.0) {
    support.indices.pop_back();
  }
  double total = 0.0;
  for (std::size_t i : support.indices) total += probs[i];
  for (std::size_t i : support.indices) support.probs.push_back(probs[i] / total);
  return support;
}

std::size_t sample_from_support(const NucleusSupport& support, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < support.indices.size(); ++i) {
    acc += support.probs[i];
    if (u < acc) return support.indices[i];
  }
  return support.indices.back();
}

std::size_t nucleus_topk_sample(const CategoricalDist& dist, double p, std::size_t k, Rng& rng) {
  return sample_from_support(nucleus_topk_support(dist, p, k), rng);
}

double entropy(std::span<const double> probs) noexcept {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

double js_divergence(std::span<const std::span<const double>> dists) {
  if (dists.size() < 2) throw Error(ErrorKind::kInvalidArgument, "JS divergence needs >= 2 distributions");
  const std::size_t c = dists[0].size();
  for (const auto& d : dists) {
    if (d.size() != c) throw Error(ErrorKind::kDimensionMismatch, "JS divergence support mismatch");
  }
  const double n = static_cast<double>(dists.size());
  std::vector<double> mixture(c, 0.0);
  double mean_entropy = 0.0;
  for (const auto& d : dists) {
    for (std::size_t i = 0; i < c; ++i) mixture[i] += d[i] / n;
    mean_entropy += entropy(d) / n;
  }
  return std::clamp(entropy(mixture) - mean_entropy, 0.0, std::log(n));
}

double js_divergence(std::span<const CategoricalDist> dists) {
  std::vector<std::span<const double>> views;
  views.reserve(dists.size());
  for (const auto& d : dists) views.push_back(d.probs());
  return js_divergence(std::span<const std::span<const double>>(views));
}

double sample_uncertainty(const EnsemblePrediction& prediction) {
  const int k = prediction.heads();
  std::vector<std::span<const double>> heads(static_cast<std::size_t>(k));
  double total = 0.0;
  for (int y = 0; y < prediction.height(); ++y) {
    for (int x = 0; x < prediction.width(); ++x) {
      bool identical = true;
      for (int h = 0; h < k; ++h) {
        heads[static_cast<std::size_t>(h)] = prediction.pixel(h, x, y);
        if (h > 0 && identical) {
          identical = std::equal(heads[static_cast<std::size_t>(h)].begin(),
                                 heads[static_cast<std::size_t>(h)].end(), heads[0].begin());
        }
      }
      if (!identical) total += js_divergence(std::span<const std::span<const double>>(heads));
    }
  }
  return total / (static_cast<double>(prediction.width()) * prediction.height());
}

std::size_t ceil_count(double x) noexcept {
  if (x <= 0.0) return 0;
  return static_cast<std::size_t>(std::ceil(x - 1e-9));
}

std::vector<std::size_t> uncertainty_filter(std::span<const ScoredId> samples, double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "uncertainty fraction must lie in [0,1)");
  }
  const std::size_t drop = std::min(samples.size(), ceil_count(fraction * samples.size()));
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (samples[a].score != samples[b].score) return samples[a].score > samples[b].score;
    return samples[a].id > samples[b].id;
  });
  std::vector<bool> dropped(samples.size(), false);
  for (std::size_t i = 0; i < drop; ++i) dropped[order[i]] = true;
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!dropped[i]) kept.push_back(i);
  }
  return kept;
}

std::vector<std::size_t> confidence_rejection(std::span<const ScoredId> samples, double rate) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "rejection rate must lie in [0,1)");
  }
  const std::size_t keep = std::min(samples.size(), ceil_count((1.0 - rate) * samples.size()));
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (samples[a].score != samples[b].score) return samples[a].score > samples[b].score;
    return samples[a].id < samples[b].id;
  });
  std::vector<std::size_t> kept(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep));
  std::sort(kept.begin(), kept.end());
  return kept;
}

std::vector<LabeledSample> uncertainty_filter(std::vector<LabeledSample> samples, double fraction) {
  const auto kept = uncertainty_filter(scores_of(samples, true), fraction);
  return select(std::move(samples), kept);
}

std::vector<LabeledSample> confidence_rejection(std::vector<LabeledSample> samples, double rate) {
  const auto kept = confidence_rejection(scores_of(samples, false), rate);
  return select(std::move(samples), kept);
}

}  // namespace labelgen::sampling
