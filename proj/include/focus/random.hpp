#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace focus {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Deterministic child seed from a base seed and a path of salts.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> salts);

/// Seeded FNV-1a over the bytes of `s`, finished with mix64.
std::uint64_t hash_string(std::string_view s, std::uint64_t seed = 0);

/// Uniform integer in [0, n) by rejection; n > 0.
std::size_t uniform_index(Rng& rng, std::size_t n);

double uniform01(Rng& rng);

/// Fisher-Yates with uniform_index, so results do not depend on the library's shuffle.
template <typename T>
void shuffle_in_place(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng);

/// Draw from Dirichlet(alpha, ..., alpha). Falls back to a one-hot draw when
/// every gamma variate underflows (tiny alpha).
std::vector<double> sample_dirichlet(Rng& rng, std::size_t k, double alpha);

/// Index drawn proportionally to non-negative weights; returns weights.size() when all are zero.
std::size_t sample_weighted(Rng& rng, std::span<const double> weights);

}  // namespace focus
