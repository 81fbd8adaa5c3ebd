#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace exitnas {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
  return mix_seed(mix_seed(base) ^ (stream * 0xd1b54a32d192ed03ULL));
}

// The helpers below avoid std::uniform_*_distribution so that seeded streams
// are identical across standard library implementations.

/// Uniform index in [0, n). n must be positive.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t draw = rng();
  while (draw >= limit) {
    draw = rng();
  }
  return static_cast<std::size_t>(draw % bound);
}

/// Uniform double in [0, 1).
inline double uniform_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(Rng& rng, double p) {
  return uniform_unit(rng) < p;
}

/// Box-Muller standard normal; consumes two draws.
double standard_normal(Rng& rng);

template <typename Container>
const auto& random_choice(Rng& rng, const Container& options) {
  return options[uniform_index(rng, options.size())];
}

/// 64-bit FNV-1a over a byte string.
std::uint64_t fnv1a(std::span<const unsigned char> bytes) noexcept;

} // namespace exitnas
