#pragma once

#include <cstdint>

namespace galds {

// Deterministic 64-bit generator (splitmix64). All randomness in the library
// flows from explicit seeds through this type so runs replay bit-for-bit.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Fisher-Yates index shuffle.
  template <typename T>
  void shuffle(T& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(next_u64() % i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // Independent child stream; `salt` separates consumers.
  Rng fork(uint64_t salt) {
    Rng tmp(state_ ^ (0x5851f42d4c957f2dull * (salt + 1)));
    return Rng(tmp.next_u64());
  }

 private:
  uint64_t state_;
};

}  // namespace galds
