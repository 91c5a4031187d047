#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace mgrid {

/// Engine used for every stochastic element. The output sequence of
/// mt19937_64 is fixed by the standard, and all derived variates below are
/// computed by hand, so a seed produces the same stream on every platform.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer (Steele, Lea & Flood, 2014).
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream splitting. Starting from `seed`, each label in `path` is folded in as
///   seed <- splitmix64(seed ^ splitmix64(label))
/// so distinct label paths give statistically independent child seeds.
constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                    std::initializer_list<std::uint64_t> path) noexcept {
  for (auto label : path) seed = splitmix64(seed ^ splitmix64(label));
  return seed;
}

/// Labels used as the first element of derive_seed paths.
namespace stream {
inline constexpr std::uint64_t kTraining = 1;
inline constexpr std::uint64_t kExploration = 2;
inline constexpr std::uint64_t kEnvironment = 3;
inline constexpr std::uint64_t kPrice = 4;
inline constexpr std::uint64_t kEvaluation = 5;
inline constexpr std::uint64_t kReplicate = 6;
inline constexpr std::uint64_t kDemandMatrix = 7;
}  // namespace stream

/// Uniform double in [0, 1) built from the top 53 bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n), Lemire's multiply-and-reject method.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  unsigned __int128 m = static_cast<unsigned __int128>(rng()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(rng()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

}  // namespace mgrid
