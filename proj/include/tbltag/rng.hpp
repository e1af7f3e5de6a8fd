#pragma once

#include <cstdint>

namespace tbltag {

// splitmix64 finalizer (Vigna). Used both as the generator step and as the
// mixing function for deriving independent sub-streams from a master seed.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic, seedable, splittable PRNG. All randomness in the library
// flows through this type; outputs are stable across platforms and runs.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  // Unbiased draw in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    // rejection from the top to avoid modulo bias
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v;
    do {
      v = next();
    } while (v >= limit);
    return v % n;
  }

  // Uniform double in [0, 1).
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return unit() < p; }

 private:
  std::uint64_t state_;
};

// Derives a sub-stream seed from a master seed and up to three keys.
// Distinct key tuples give independent streams; the chain is order-sensitive,
// so parallel and serial consumers of per-position streams agree.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = mix64(seed + 0x9e3779b97f4a7c15ULL);
  s = mix64(s ^ (a + 0xbf58476d1ce4e5b9ULL));
  s = mix64(s ^ (b + 0x94d049bb133111ebULL));
  s = mix64(s ^ (c + 0x2545f4914f6cdd1dULL));
  return s;
}

}  // namespace tbltag
