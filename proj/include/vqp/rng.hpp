#pragma once

#include <cstdint>

namespace vqp {

// Finalizer of SplitMix64: a full-avalanche 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Counter-based stream: the draw for (seed, index, component) is a pure
// function of its arguments, so draws may happen in any order and from any
// thread with identical results.
constexpr std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t index,
                                     std::uint64_t component) noexcept {
  std::uint64_t h = mix64(seed + 0x9e3779b97f4a7c15ull);
  h = mix64(h ^ mix64(index + 0x6a09e667f3bcc909ull));
  h = mix64(h ^ mix64(component + 0xbb67ae8584caa73bull));
  return h;
}

// Uniform draw strictly inside (0, 1); never returns an endpoint, which keeps
// the inverse normal CDF finite.
inline double uniform_open01(std::uint64_t seed, std::uint64_t index,
                             std::uint64_t component) noexcept {
  const std::uint64_t bits = counter_hash(seed, index, component) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

// Standard normal draw via the inverse CDF of the uniform above.
double gaussian_draw(std::uint64_t seed, std::uint64_t index,
                     std::uint64_t component);

}  // namespace vqp
