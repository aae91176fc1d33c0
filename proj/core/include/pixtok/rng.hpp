#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace pixtok {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
std::uint64_t mix_seed(std::uint64_t x);

// Derives an independent stream seed from a base seed and a path of ids, e.g.
// derive_seed(seed, {epoch, sample}). Same inputs, same stream.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> ids);
std::uint64_t hash_name(std::string_view name);

inline Rng make_rng(std::uint64_t base, std::initializer_list<std::uint64_t> ids = {}) {
  return Rng(derive_seed(base, ids));
}

// Uniform double in [0, 1) from 53 random bits; stable across standard libraries.
double uniform01(Rng& rng);
// Uniform integer in [0, n).
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);
double normal(Rng& rng, double mean = 0.0, double stddev = 1.0);
// Beta(a, a) via two gamma draws.
double beta_symmetric(Rng& rng, double alpha);

}  // namespace pixtok
