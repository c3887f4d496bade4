#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace speclab {

/// SplitMix64 output finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Counter-based hash of (seed, stream, counter). Every draw is a pure
/// function of its key, so results do not depend on evaluation order or on
/// how work is split across threads.
constexpr std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t stream,
                                     std::uint64_t counter) noexcept {
  constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;
  std::uint64_t z = mix64(seed + kGolden);
  z = mix64(z ^ (stream * kGolden + 0x632be59bd9b4e019ull));
  z = mix64(z ^ (counter * 0xd6e8feb86659fd93ull + kGolden));
  return z;
}

/// Top 53 bits mapped to [0, 1).
constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Sequential view of one counter stream. Cheap to copy; a copy replays the
/// same sequence.
class CounterStream {
 public:
  constexpr CounterStream(std::uint64_t seed, std::uint64_t stream) noexcept
      : seed_(seed), stream_(stream) {}

  constexpr std::uint64_t next_bits() noexcept {
    return counter_hash(seed_, stream_, counter_++);
  }

  constexpr double uniform() noexcept { return to_unit(next_bits()); }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (one value per call, second discarded).
  double normal() noexcept {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  constexpr std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

}  // namespace speclab
