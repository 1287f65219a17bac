#pragma once

#include <cstdint>
#include <cmath>

namespace proxsg {

// Deterministic PRNG used across the library. We deliberately avoid
// std::mt19937 + <random> distributions: the standard leaves distribution
// algorithms implementation-defined, and we promise byte-identical
// trajectories for a given seed. xoshiro256** with splitmix64 seeding is
// small, fast, and fully pinned down here.

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// Stable mixing of a master seed with stream/cell identifiers, used to derive
// independent substream seeds (e.g. per grid cell: mix(master, b, replicate)).
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0,
                              std::uint64_t c = 0) {
  std::uint64_t s = a;
  std::uint64_t h = detail::splitmix64(s);
  s ^= b * 0xFF51AFD7ED558CCDull + 0x2545F4914F6CDD1Dull;
  h ^= detail::splitmix64(s);
  s ^= c * 0xC4CEB9FE1A85EC53ull + 0x9E3779B97F4A7C15ull;
  h ^= detail::splitmix64(s);
  return h;
}

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) {
    std::uint64_t st = seed;
    for (auto& w : s_) w = detail::splitmix64(st);
    // xoshiro256** must not start from the all-zero state
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 0x1ull;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = detail::rotl64(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = detail::rotl64(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform01() < p; }

  // Uniform integer in [0, bound); unbiased (multiply-shift with rejection).
  std::uint64_t below(std::uint64_t bound) {
    unsigned __int128 m = (unsigned __int128)next_u64() * bound;
    auto lo = (std::uint64_t)m;
    if (lo < bound) {
      const std::uint64_t t = (-bound) % bound;
      while (lo < t) {
        m = (unsigned __int128)next_u64() * bound;
        lo = (std::uint64_t)m;
      }
    }
    return (std::uint64_t)(m >> 64);
  }

  // Standard gaussian via Box-Muller (the spare value is cached).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Named substreams of one run, all derived from one master seed. Batch draws,
// anchor coin flips, quantizer draws and diagnostics each consume their own
// stream, so turning logging on or off can never perturb the trajectory.
struct RngBundle {
  RngStream batch;
  RngStream coin;
  RngStream quantizer;
  RngStream diag;

  static RngBundle for_seed(std::uint64_t seed) {
    return RngBundle{RngStream(mix_seed(seed, kBatchTag)),
                     RngStream(mix_seed(seed, kCoinTag)),
                     RngStream(mix_seed(seed, kQuantizerTag)),
                     RngStream(mix_seed(seed, kDiagTag))};
  }

  static constexpr std::uint64_t kBatchTag = 0xB07C9A11u;
  static constexpr std::uint64_t kCoinTag = 0xC0111F19u;
  static constexpr std::uint64_t kQuantizerTag = 0x5349A27Eu;
  static constexpr std::uint64_t kDiagTag = 0xD1A6057Cu;
};

}  // namespace proxsg
