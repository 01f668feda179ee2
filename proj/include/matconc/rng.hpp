#pragma once

#include <cstdint>
#include <random>

namespace matconc {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of substream `stream` of trial `trial` under `base`.
constexpr std::uint64_t substream_seed(std::uint64_t base, std::uint64_t trial,
                                       std::uint64_t stream = 0) {
  return mix64(mix64(mix64(base) ^ trial) ^ (stream * 0xd1b54a32d192ed03ULL));
}

inline Rng make_rng(std::uint64_t base, std::uint64_t trial, std::uint64_t stream = 0) {
  return Rng(substream_seed(base, trial, stream));
}

// Streams are kept apart so randomizer draws never share state with data draws.
namespace stream {
inline constexpr std::uint64_t kData = 1;
inline constexpr std::uint64_t kRandomizer = 2;
inline constexpr std::uint64_t kStopping = 3;
inline constexpr std::uint64_t kLatent = 4;
}  // namespace stream

/// Uniform on the open interval (0, 1).
inline double open_uniform(Rng& rng) {
  double u;
  do {
    u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  } while (u <= 0.0);
  return u;
}

inline double rademacher(Rng& rng) { return (rng() >> 63) ? 1.0 : -1.0; }

inline double std_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

}  // namespace matconc
