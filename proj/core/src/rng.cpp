#include "tinygroups/rng.hpp"

#include <stdexcept>

#include "tinygroups/hashing.hpp"

namespace tinygroups {

uint64_t Rng::below(uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("Rng::below: zero bound");
  // Rejection sampling on the top range to avoid modulo bias.
  uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    uint64_t r = next();
    if (r >= threshold) return r % bound;
  }
}

Rng Rng::derive(uint64_t seed, std::string_view tag) {
  return Rng(hash64_words(tag, {seed}));
}

Rng Rng::derive(uint64_t seed, std::string_view tag, uint64_t a) {
  return Rng(hash64_words(tag, {seed, a}));
}

Rng Rng::derive(uint64_t seed, std::string_view tag, uint64_t a, uint64_t b) {
  return Rng(hash64_words(tag, {seed, a, b}));
}

}  // namespace tinygroups
