#pragma once

#include <cstdint>
#include <string_view>

namespace tinygroups {

/**
 * Deterministic stream generator (splitmix64).
 *
 * Streams are derived by hashing (seed, tag, entity ids), so every consumer
 * owns an independent stream and adding a new consumer never perturbs the
 * draws seen by existing ones. All simulation randomness goes through this
 * class; nothing uses std:: distributions, which keeps output bit-exact
 * across standard libraries.
 */
class Rng {
 public:
  explicit Rng(uint64_t state) : state_(state) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0,1) with 53 random bits.
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Unbiased uniform integer in [0, bound). bound must be nonzero.
  uint64_t below(uint64_t bound);

  size_t index(size_t n) { return static_cast<size_t>(below(n)); }

  bool bernoulli(double p) { return unit() < p; }

  static Rng derive(uint64_t seed, std::string_view tag);
  static Rng derive(uint64_t seed, std::string_view tag, uint64_t a);
  static Rng derive(uint64_t seed, std::string_view tag, uint64_t a, uint64_t b);

 private:
  uint64_t state_;
};

}  // namespace tinygroups
