#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace selfedit {

/// FNV-1a over raw bytes.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t state = 0xcbf29ce484222325ULL) noexcept;

/// Mixes a value into a seed (splitmix64 finaliser). Every derived seed in the
/// library goes through these two overloads so replays can reproduce streams.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t value) noexcept;
std::uint64_t mix_seed(std::uint64_t seed, std::string_view tag) noexcept;

template <typename... Parts>
std::uint64_t derive_seed(std::uint64_t seed, const Parts&... parts) {
  ((seed = mix_seed(seed, parts)), ...);
  return seed;
}

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) from the top 53 bits. Portable across standard
/// libraries, unlike std::uniform_real_distribution.
double unit_uniform(Rng& rng);

/// Uniform integer in [0, n) by rejection.
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);

/// Standard normal via Box-Muller on unit_uniform.
double standard_normal(Rng& rng);

}  // namespace selfedit
