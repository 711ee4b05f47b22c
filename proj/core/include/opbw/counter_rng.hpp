#pragma once

// Stateless, counter-based randomness. Every random quantity in the model is a
// pure function of a key built from (seed, stream tag, coordinates), so results
// never depend on query order or on how work is split across threads.

#include <cstdint>

#include "opbw/types.hpp"

namespace opbw::rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// splitmix64 finaliser
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t combine(std::uint64_t h, std::uint64_t v) {
  return mix64(h ^ (v * kGolden + 0x632BE59BD9B4E019ULL + (h << 6) + (h >> 2)));
}

/// Seed of replica `replica` (and optional sub-stream) under a base seed.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t replica,
                                    std::uint64_t sub = 0) {
  return combine(combine(mix64(base + kGolden), replica), sub);
}

// Stream tags; distinct tags give independent fields over the same sites.
enum class Tag : std::uint64_t {
  kOmega = 0x6f6d6567,        // site openness
  kPermutation = 0x7065726d,  // ω̃ (field index is mixed in separately)
  kCapacity = 0x63617061,
  kWalk = 0x77616c6b,
};

inline std::uint64_t site_key(std::uint64_t seed, Tag tag, const Site& s, int d) {
  std::uint64_t h = combine(seed, static_cast<std::uint64_t>(tag));
  h = combine(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(s.n)));
  for (int i = 0; i < d; ++i) {
    h = combine(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(s.x[i])));
  }
  return h;
}

/// A finite stream of uniform 64-bit words derived from one key.
class CounterStream {
 public:
  explicit constexpr CounterStream(std::uint64_t key) : key_(key) {}

  constexpr std::uint64_t next() { return mix64(key_ + kGolden * ++counter_); }

  /// Uniform integer in [0, bound), bound > 0 (Lemire's nearly-divisionless method).
  std::uint64_t below(std::uint64_t bound) {
    std::uint64_t x = next();
    __uint128_t m = static_cast<__uint128_t>(x) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        x = next();
        m = static_cast<__uint128_t>(x) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Threshold such that (word < threshold) has probability p for a uniform word.
/// p == 1 is handled by callers (all-open fast path).
inline std::uint64_t bernoulli_threshold(double p) {
  if (p >= 1.0) return ~std::uint64_t{0};
  if (p <= 0.0) return 0;
  return static_cast<std::uint64_t>(p * 0x1.0p64);
}

}  // namespace opbw::rng
