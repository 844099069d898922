#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ssca {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to expand one master seed into independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of stream `index` under `master`. Streams with distinct (master, domain, index) never share
/// a seed in practice.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t domain, std::uint64_t index) {
  return splitmix64(splitmix64(master ^ splitmix64(domain)) + index);
}

// Stream domains.
inline constexpr std::uint64_t kIterationStream = 1;
inline constexpr std::uint64_t kRestartStream = 2;
inline constexpr std::uint64_t kPathStream = 3;
inline constexpr std::uint64_t kEstimateStream = 4;

/// Uniform double in [0, 1) from the top 53 bits. Independent of the standard library's
/// distribution implementations so sample streams are identical across toolchains.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Exponential variate with the given mean by inversion.
inline double exponential(Rng& rng, double mean) { return -mean * std::log1p(-uniform01(rng)); }

}  // namespace ssca
