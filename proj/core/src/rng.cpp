#include "labelgen/rng.hpp"

#include <cmath>
#include <numbers>

namespace labelgen {

Rng Rng::substream(std::uint64_t id) const noexcept {
  return Rng(mix64(key_ ^ mix64(id ^ 0x5851f42d4c957f2dULL)), 0);
}

std::uint64_t Rng::next_u64() noexcept {
  const std::uint64_t n = counter_++;
  return mix64(key_ ^ mix64(n * 0xd1342543de82ef95ULL + 1));
}

double Rng::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t bound) noexcept {
  const std::uint64_t limit = bound * (UINT64_MAX / bound);
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % bound;
}

double Rng::normal() noexcept {
  if (cached_normal_) {
    const double z = *cached_normal_;
    cached_normal_.reset();
    return z;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_normal_ = radius * std::sin(angle);
  return radius * std::cos(angle);
}

}  // namespace labelgen
