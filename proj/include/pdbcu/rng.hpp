#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace pdbcu {

/// Seedable, splittable random source with platform-independent output.
///
/// The raw engine is std::mt19937_64, whose sequence is fixed by the
/// standard. The std distributions are implementation-defined, so every
/// mapping from raw 64-bit words to indices and reals lives here:
///
///  - uniform_index(n): rejection sampling. Let limit = 2^64 - (2^64 mod n).
///    Draw words until w < limit, then return w mod n. n == 1 returns 0
///    without consuming a word.
///  - uniform01(): top 53 bits of one word times 2^-53, in [0, 1).
///  - normal(): Box-Muller on two uniform01 draws, caching the second value.
///  - split(stream): a child generator seeded with splitmix64(seed ^ mix(stream)).
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  std::uint64_t uniform_index(std::uint64_t n) {
    if (n <= 1) return 0;
    // (2^64 - n) % n == 2^64 % n in 64-bit arithmetic.
    const std::uint64_t rem = (0 - n) % n;
    const std::uint64_t limit = 0 - rem;  // 2^64 - rem; 0 when rem == 0
    for (;;) {
      const std::uint64_t w = engine_();
      if (rem == 0 || w < limit) return w % n;
    }
  }

  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  Rng split(std::uint64_t stream) const {
    return Rng(splitmix64(seed_ ^ splitmix64(stream + 0x632be59bd9b4e019ULL)));
  }

  static std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace pdbcu
