#pragma once

#include <cstdint>
#include <random>

namespace starkshield {

using Rng = std::mt19937_64;

/// Purpose tags that keep independent random streams apart even when they
/// share a master seed and an item index.
enum class Stream : std::uint64_t {
  ramsey_noise = 0x52414d53,
  spectroscopy_noise = 0x53504543,
  qpt_noise = 0x51505430,
  qpt_shots = 0x51505431,
  noise_validate_ou = 0x4e564f55,
  noise_validate_rtn = 0x4e565254,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-style key derivation: the seed for work item `index` depends only
/// on (master, stream, index), never on which thread runs it or when.
constexpr std::uint64_t derive_seed(std::uint64_t master, Stream stream,
                                    std::uint64_t index) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
  return splitmix64(h ^ splitmix64(index));
}

inline Rng make_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32)};
  return Rng(seq);
}

}  // namespace starkshield
