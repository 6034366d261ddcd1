#pragma once

#include <cstdint>
#include <random>

namespace asyncon {

/// Delay draws use std::mt19937_64, whose output sequence is fixed by the C++
/// standard, so runs reproduce across compilers and platforms. Distribution
/// objects from <random> are implementation-defined and are not used.
using Engine = std::mt19937_64;

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed for Monte Carlo sample `index` under `master`.
constexpr std::uint64_t sample_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix64(master ^ mix64(index + kGoldenGamma));
}

/// Uniform integer in [0, bound) by rejection; bound must be positive.
inline std::uint64_t uniform_below(Engine& g, std::uint64_t bound) {
  const std::uint64_t threshold = (0 - bound) % bound;
  std::uint64_t x = g();
  while (x < threshold) x = g();
  return x % bound;
}

}  // namespace asyncon
