#pragma once

#include <cstdint>

namespace htpaxos {

/// Deterministic PRNG used everywhere randomness is needed.
///
/// We deliberately avoid <random> distributions: their output is
/// implementation-defined, and the harness promises byte-identical traces for
/// a given seed on any platform.  splitmix64 seeds a xoshiro256** core; the
/// sampling helpers below are fixed algorithms, not library calls.
class Rng {
public:
  explicit Rng(uint64_t seed) {
    uint64_t x = seed;
    for (auto& word : s_) {
      x += 0x9e3779b97f4a7c15ull;
      uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
      word = z ^ (z >> 31);
    }
  }

  /// Derive an independent stream, e.g. one per agent.  Mixing the salt
  /// through splitmix keeps streams decorrelated even for adjacent salts.
  Rng fork(uint64_t salt) const {
    return Rng(s_[0] ^ (salt * 0x9e3779b97f4a7c15ull) ^ s_[3]);
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform in [0, n).  n == 0 is a caller bug; returns 0.
  uint64_t below(uint64_t n) {
    if (n <= 1) return 0;
    // Debiased modulo (rejection sampling on the top range).
    const uint64_t limit = ~uint64_t{0} - (~uint64_t{0} % n);
    uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
  }

  /// Uniform integer in [lo, hi] inclusive.
  int64_t range(int64_t lo, int64_t hi) {
    if (hi <= lo) return lo;
    return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi - lo + 1)));
  }

  /// True with probability p (p in [0,1]).  Uses the top 53 bits so the
  /// comparison is exact in double precision.
  bool chance(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    const double u = static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
    return u < p;
  }

private:
  static constexpr uint64_t rotl(uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  uint64_t s_[4];
};

/// FNV-1a, used for executed-log hashes and trace digests.
inline uint64_t fnv1a(uint64_t h, const void* data, size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

constexpr uint64_t kFnvBasis = 0xcbf29ce484222325ull;

}  // namespace htpaxos
