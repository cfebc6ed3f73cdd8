#pragma once

#include <cmath>
#include <cstdint>

namespace ptycho {

// SplitMix64. Used to spread user seeds and derive substream seeds; the raw
// user seed may be low-entropy (0, 1, 2, ...).
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a) { return splitmix64(a); }

// Order-sensitive combine: mix_seed(s, 1, 2) != mix_seed(s, 2, 1).
template <typename... Rest>
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, Rest... rest) {
  return mix_seed(splitmix64(a) ^ (b + 0x9e3779b97f4a7c15ull), rest...);
}

// xoshiro256++ with SplitMix64 seeding. Self-contained so that streams are
// bit-identical across standard libraries and platforms; std:: distributions
// carry no such guarantee.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    for (auto& w : s_) {
      seed = splitmix64(seed + 0x9e3779b97f4a7c15ull);
      w = seed;
    }
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform in [0, 1), 53-bit mantissa
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in (0, 1); never returns an endpoint (safe under log())
  double uniform_open() { return (double(next_u64() >> 12) + 0.5) * 0x1.0p-52; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // integer in [0, n) without modulo bias
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // standard normal via Box-Muller (one cached variate)
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4]{};
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace ptycho
