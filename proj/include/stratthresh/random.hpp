#pragma once

#include <cstdint>
#include <random>

namespace stratthresh {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent generator for sub-stream `stream` of `seed`. Same (seed, stream)
// always yields the same sequence, so sharded work is reproducible for any
// thread count.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(seed)),
                    static_cast<std::uint32_t>(splitmix64(seed) >> 32),
                    static_cast<std::uint32_t>(splitmix64(seed ^ splitmix64(stream))),
                    static_cast<std::uint32_t>(splitmix64(stream + 0x632be59bd9b4e019ULL))};
  return Rng(seq);
}

// Uniform draw on the open interval (0, 1).
inline double uniform_open(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace stratthresh
