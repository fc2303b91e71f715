#pragma once

#include <cstdint>
#include <random>

namespace pamlab {

using Rng = std::mt19937_64;

/// SplitMix64 finaliser; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of stream `stream` split off `seed`. Streams for distinct indices are
/// decorrelated, and the mapping does not depend on thread scheduling.
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(stream_seed(seed, stream)),
                    static_cast<std::uint32_t>(stream_seed(seed, stream) >> 32)};
  return Rng(seq);
}

}  // namespace pamlab
