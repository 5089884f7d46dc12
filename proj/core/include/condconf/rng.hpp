#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace condconf {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; a bijective 64-bit mixer.
std::uint64_t splitmix64(std::uint64_t x);

/// FNV-1a over bytes. Stable across platforms, used for labels and config hashes.
std::uint64_t fnv1a64(std::string_view bytes);

/// Labeled sub-seed: adding a new label never perturbs seeds of existing labels.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

inline Rng make_rng(std::uint64_t seed) { return Rng(splitmix64(seed)); }

/// Uniform double in [0, 1) from the top 53 bits; identical on every standard library.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// Standard normal via Box-Muller (both draws consumed; no cached state).
double standard_normal(Rng& rng);

}  // namespace condconf
