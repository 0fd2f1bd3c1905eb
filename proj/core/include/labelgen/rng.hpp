#pragma once

#include <cstdint>
#include <optional>

namespace labelgen {

/// splitmix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based generator: the n-th draw is a pure function of (key, n), so
/// substreams can be derived and consumed in any order without coordination.
/// All distributions are implemented here rather than through <random> so the
/// streams are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : key_(mix64(seed)) {}

  /// Independent stream keyed by `id`; does not advance this generator.
  Rng substream(std::uint64_t id) const noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform() noexcept;
  /// Uniform integer in [0, bound); bound must be positive.
  std::uint64_t below(std::uint64_t bound) noexcept;
  /// Standard normal via Box-Muller.
  double normal() noexcept;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t position() const noexcept { return counter_; }

 private:
  Rng(std::uint64_t key, int) noexcept : key_(key) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::optional<double> cached_normal_;
};

}  // namespace labelgen
