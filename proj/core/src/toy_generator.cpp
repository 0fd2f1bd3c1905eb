#include "labelgen/toy_generator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "labelgen/error.hpp"
#include "labelgen/rng.hpp"

namespace labelgen::toy {

namespace {

constexpr std::uint64_t kDisagreementStream = 1;
constexpr std::uint64_t kConfidenceStream = 2;
constexpr std::uint64_t kTextureStream = 3;
constexpr std::uint64_t kHeadStreamBase = 100;

double coord(std::span<const double> z, std::size_t i) {
  return i < z.size() ? z[i] : 0.0;
}

struct Shape {
  ShapeFamily family;
  double cx, cy;     // pixel units
  double major;      // semi-major axis / outer radius
  double minor;      // semi-minor axis
  double aspect;
  double cos_t, sin_t;
  std::array<std::pair<double, double>, 10> star{};  // local-frame vertices

  bool contains(double px, double py) const {
    const double dx = px - cx;
    const double dy = py - cy;
    const double u = dx * cos_t + dy * sin_t;
    const double v = -dx * sin_t + dy * cos_t;
    switch (family) {
      case ShapeFamily::kEllipse:
        return (u * u) / (major * major) + (v * v) / (minor * minor) <= 1.0;
      case ShapeFamily::kRectangle:
        return std::abs(u) <= major && std::abs(v) <= minor;
      case ShapeFamily::kStar: {
        bool in = false;
        for (std::size_t i = 0, j = star.size() - 1; i < star.size(); j = i++) {
          const auto [xi, yi] = star[i];
          const auto [xj, yj] = star[j];
          if ((yi > v) != (yj > v) && u < (xj - xi) * (v - yi) / (yj - yi) + xi) in = !in;
        }
        return in;
      }
      case ShapeFamily::kCrescent: {
        const double inner = major * (0.65 + 0.2 * aspect);
        const double off = 0.45 * major;
        const bool outer_hit = u * u + v * v <= major * major;
        const bool inner_hit = (u - off) * (u - off) + v * v <= inner * inner;
        return outer_hit && !inner_hit;
      }
    }
    return false;
  }

  /// Radius of a disk around the center that contains the shape.
  double bounding_radius() const {
    if (family == ShapeFamily::kRectangle) return std::hypot(major, minor);
    if (family == ShapeFamily::kEllipse) return major;
    return major;
  }
};

std::uint8_t lerp_u8(std::uint8_t lo, std::uint8_t hi, double t) {
  return static_cast<std::uint8_t>(std::lround(lo + (hi - lo) * std::clamp(t, 0.0, 1.0)));
}

std::uint8_t clamp_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

std::string_view to_string(ShapeFamily family) noexcept {
  switch (family) {
    case ShapeFamily::kEllipse: return "ellipse";
    case ShapeFamily::kRectangle: return "rectangle";
    case ShapeFamily::kStar: return "star";
    case ShapeFamily::kCrescent: return "crescent";
  }
  return "ellipse";
}

void ToyClassSpec::validate() const {
  if (!(size.lo > 0.0 && size.lo <= size.hi && size.hi <= 0.9)) {
    throw Error(ErrorKind::kInvalidArgument, "toy size range must lie within (0, 0.9]");
  }
  if (!(aspect.lo > 0.0 && aspect.lo <= aspect.hi && aspect.hi <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "toy aspect range must lie within (0, 1]");
  }
  if (texture_id < 0 || texture_id > 3) {
    throw Error(ErrorKind::kInvalidArgument, "toy texture id must be 0..3");
  }
}

ToyTaxonomy toy_taxonomy(int num_classes, std::uint64_t seed) {
  if (num_classes < 4 || num_classes > kMaxClassId) {
    throw Error(ErrorKind::kInvalidArgument, "toy taxonomy needs 4..1000 classes");
  }
  constexpr std::array<ShapeFamily, 4> kFamilies{ShapeFamily::kEllipse, ShapeFamily::kRectangle,
                                                 ShapeFamily::kStar, ShapeFamily::kCrescent};
  ToyTaxonomy out;
  const Rng root(seed);
  for (int id = 1; id <= num_classes; ++id) {
    Rng rng = root.substream(static_cast<std::uint64_t>(id));
    ToyClassSpec spec;
    spec.class_id = id;
    spec.family = kFamilies[static_cast<std::size_t>((id - 1) % 4)];
    spec.size = {0.30 + 0.10 * rng.uniform(), 0.55 + 0.10 * rng.uniform()};
    const double aspect_lo = 0.5 + 0.2 * rng.uniform();
    spec.aspect = {aspect_lo, std::min(1.0, aspect_lo + 0.1 + 0.2 * rng.uniform())};
    spec.rotation = {0.0, std::numbers::pi * rng.uniform()};
    for (std::size_t c = 0; c < 3; ++c) {
      spec.color_lo[c] = static_cast<std::uint8_t>(rng.below(196));
      spec.color_hi[c] = static_cast<std::uint8_t>(spec.color_lo[c] + rng.below(60));
    }
    spec.texture_id = static_cast<int>(rng.below(4));
    spec.validate();

    const std::string name = std::string(to_string(spec.family)) + "-" + std::to_string(id);
    out.taxonomy.classes[id] = name;
    out.taxonomy.groups["family"][id] = static_cast<int>((id - 1) % 4) + 1;
    out.taxonomy.groups["FG/BG"][id] = 1;
    out.specs.push_back(spec);
  }
  return out;
}

double latent_unit(double z) noexcept { return std::clamp((z + 3.0) / 6.0, 0.0, 1.0); }

double seeded_disagreement(std::uint64_t seed) noexcept {
  return Rng(seed).substream(kDisagreementStream).uniform();
}

std::vector<std::size_t> boundary_band(const Mask& mask, int radius) {
  const int w = mask.width();
  const int h = mask.height();
  std::vector<std::size_t> band;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool fg = is_foreground(mask.at(x, y));
      bool near = false;
      for (int dy = -radius; dy <= radius && !near; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= h) continue;
        for (int dx = -radius; dx <= radius; ++dx) {
          const int xx = x + dx;
          if (xx < 0 || xx >= w) continue;
          if (is_foreground(mask.at(xx, yy)) != fg) {
            near = true;
            break;
          }
        }
      }
      if (near) band.push_back(static_cast<std::size_t>(y) * w + x);
    }
  }
  return band;
}

ToyOutput toy_generate(const ToyClassSpec& spec, std::span<const double> z, std::uint64_t seed,
                       int resolution, const ToyOptions& options) {
  if (resolution != 64 && resolution != 128 && resolution != 256) {
    throw Error(ErrorKind::kInvalidArgument,
                "toy resolution must be 64, 128 or 256, got " + std::to_string(resolution));
  }
  for (double v : z) {
    if (!std::isfinite(v)) throw Error(ErrorKind::kInvalidArgument, "latent vector is not finite");
  }
  spec.validate();

  const double res = resolution;
  Shape shape{};
  shape.family = spec.family;
  shape.major = 0.5 * res * spec.size.at(latent_unit(coord(z, 0)));
  shape.aspect = spec.aspect.at(latent_unit(coord(z, 1)));
  shape.minor = shape.major * shape.aspect;
  const double theta = spec.rotation.at(latent_unit(coord(z, 2)));
  shape.cos_t = std::cos(theta);
  shape.sin_t = std::sin(theta);
  const double r = shape.bounding_radius();
  const double lo = std::min(r, 0.5 * res);
  const double hi = std::max(res - r, 0.5 * res);
  shape.cx = lo + (hi - lo) * latent_unit(coord(z, 3));
  shape.cy = lo + (hi - lo) * latent_unit(coord(z, 4));
  const double inner = shape.major * (0.35 + 0.3 * shape.aspect);
  for (std::size_t i = 0; i < shape.star.size(); ++i) {
    const double radius = (i % 2 == 0) ? shape.major : inner;
    const double a = -std::numbers::pi / 2 + static_cast<double>(i) * std::numbers::pi / 5;
    shape.star[i] = {radius * std::cos(a), radius * std::sin(a)};
  }

  ToyOutput out;
  out.image = Image(resolution, resolution);
  out.gt_mask = Mask(resolution, resolution);
  for (int y = 0; y < resolution; ++y) {
    for (int x = 0; x < resolution; ++x) {
      if (shape.contains(x + 0.5, y + 0.5)) out.gt_mask.set(x, y, 1);
    }
  }

  // Appearance: textured background, class-coloured foreground, seeded noise.
  const Rng root(seed);
  Rng texture_rng = root.substream(kTextureStream);
  const double color_t = latent_unit(coord(z, 5));
  const std::array<std::uint8_t, 3> fg{lerp_u8(spec.color_lo[0], spec.color_hi[0], color_t),
                                       lerp_u8(spec.color_lo[1], spec.color_hi[1], color_t),
                                       lerp_u8(spec.color_lo[2], spec.color_hi[2], color_t)};
  std::array<double, 3> bg{};
  for (auto& c : bg) c = 40.0 + 170.0 * texture_rng.uniform();
  const double phase = 6.0 * latent_unit(coord(z, 6));
  for (int y = 0; y < resolution; ++y) {
    for (int x = 0; x < resolution; ++x) {
      const double noise = 16.0 * (texture_rng.uniform() - 0.5);
      if (out.gt_mask.at(x, y) != 0) {
        out.image.set_pixel(x, y, clamp_u8(fg[0] + noise), clamp_u8(fg[1] + noise),
                            clamp_u8(fg[2] + noise));
        continue;
      }
      double shade = 0.0;
      switch (spec.texture_id) {
        case 1: shade = ((y + static_cast<int>(phase)) / 4) % 2 == 0 ? 25.0 : -25.0; break;
        case 2: shade = (((x / 8) + (y / 8)) % 2 == 0) ? 20.0 : -20.0; break;
        case 3: shade = 50.0 * (static_cast<double>(x + y) / (2.0 * res) - 0.5); break;
        default: break;
      }
      out.image.set_pixel(x, y, clamp_u8(bg[0] + shade + noise), clamp_u8(bg[1] + shade + noise),
                          clamp_u8(bg[2] + shade + noise));
    }
  }

  out.disagreement = options.disagreement ? std::clamp(*options.disagreement, 0.0, 1.0)
                                          : seeded_disagreement(seed);
  Rng confidence_rng = root.substream(kConfidenceStream);
  out.confidence = std::clamp(
      1.0 - kConfidenceSlope * out.disagreement + kConfidenceJitter * confidence_rng.normal(), 0.0,
      1.0);

  if (options.with_ensemble) {
    const std::size_t pixels = static_cast<std::size_t>(resolution) * resolution;
    const std::size_t stride = pixels * kEnsembleClasses;
    std::vector<double> probs(stride * kEnsembleHeads, 0.0);
    const auto labels = out.gt_mask.labels();
    for (int h = 0; h < kEnsembleHeads; ++h) {
      for (std::size_t p = 0; p < pixels; ++p) {
        probs[h * stride + p * kEnsembleClasses + (labels[p] != 0 ? 1 : 0)] = 1.0;
      }
    }

    std::vector<std::size_t> pool = boundary_band(out.gt_mask);
    const double d = out.disagreement;
    const std::size_t per_head =
        std::min(sampling::ceil_count(d * static_cast<double>(pixels) / kFlipDivisor),
                 pool.size() / kEnsembleHeads);
    std::size_t taken = 0;
    for (int h = 0; h < kEnsembleHeads; ++h) {
      Rng head_rng = root.substream(kHeadStreamBase + static_cast<std::uint64_t>(h));
      for (std::size_t j = 0; j < per_head; ++j) {
        const std::size_t pick = taken + head_rng.below(pool.size() - taken);
        std::swap(pool[taken], pool[pick]);
        const std::size_t p = pool[taken++];
        const int gt = labels[p] != 0 ? 1 : 0;
        for (int c = 0; c < kEnsembleClasses; ++c) {
          probs[h * stride + p * kEnsembleClasses + c] =
              (1.0 - d) * (c == gt ? 1.0 : 0.0) + d / kEnsembleClasses;
        }
      }
    }
    out.ensemble.emplace(kEnsembleHeads, resolution, resolution, kEnsembleClasses, std::move(probs));
  }
  return out;
}

}  // namespace labelgen::toy
