#pragma once

#include <cstdint>
#include <random>

namespace fuseloc {

using Rng = std::mt19937_64;

/// Independent random streams of one run. Each sensor draws from its own
/// generator so enabling or re-rating one sensor leaves the others unchanged.
enum class Stream : std::uint64_t {
  kWheels = 1,
  kCompass = 2,
  kCamera = 3,
  kLrf = 4,
  kCalibration = 5,
  kInitial = 6,
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Sub-seed for `stream` of the run seeded with `seed`: mix64(mix64(seed) ^ stream).
constexpr std::uint64_t derive_seed(std::uint64_t seed, Stream stream) {
  return mix64(mix64(seed) ^ static_cast<std::uint64_t>(stream));
}

inline Rng make_rng(std::uint64_t seed, Stream stream) { return Rng(derive_seed(seed, stream)); }

}  // namespace fuseloc
