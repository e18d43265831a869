#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tinygroups/rng.hpp"

namespace tinygroups {

/**
 * A position on the unit ring [0,1), stored as a 64-bit fixed-point
 * fraction value/2^64. All ring arithmetic is modulo 1, which the
 * unsigned wraparound of the raw value gives for free.
 */
struct IdPoint {
  uint64_t value = 0;

  static IdPoint from_fraction(double f);
  static IdPoint from_hex(std::string_view hex);

  double fraction() const { return static_cast<double>(value) * 0x1.0p-64; }
  std::string to_hex() const;  // 16 lowercase hex digits

  IdPoint offset(uint64_t delta) const { return IdPoint{value + delta}; }

  auto operator<=>(const IdPoint&) const = default;
};

// Clockwise arc length from a to b, in raw 2^-64 units: (b - a) mod 2^64.
inline uint64_t clockwise_units(IdPoint a, IdPoint b) { return b.value - a.value; }

// Same arc length as a fraction of the ring, in [0,1).
inline double clockwise_distance(IdPoint a, IdPoint b) {
  return static_cast<double>(clockwise_units(a, b)) * 0x1.0p-64;
}

/**
 * An immutable sorted set of ring points. Successor queries are
 * O(log n); queries by index are used throughout the simulator so the
 * sorted order doubles as a dense id space.
 */
class RingSet {
 public:
  RingSet() = default;

  // Throws on duplicate points: distinct participants must have
  // distinct ids, a 64-bit collision is an error rather than a merge.
  static RingSet from_points(std::vector<IdPoint> pts);

  // n points drawn uniformly at random, resampling collisions.
  static RingSet random(size_t n, Rng& rng);

  const std::vector<IdPoint>& points() const { return points_; }
  size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

  // First point at or clockwise of x, wrapping past the top of the
  // ring. A point is its own successor. Throws on an empty ring.
  IdPoint successor(IdPoint x) const { return points_[successor_index(x)]; }
  size_t successor_index(IdPoint x) const;

  // Ring predecessor of the point at index i (wraps).
  size_t predecessor_index(size_t i) const;
  IdPoint predecessor(IdPoint w) const;

  const IdPoint& at(size_t i) const { return points_[i]; }
  bool contains(IdPoint p) const;
  size_t index_of(IdPoint p) const;  // throws if absent

 private:
  explicit RingSet(std::vector<IdPoint> sorted) : points_(std::move(sorted)) {}
  std::vector<IdPoint> points_;
};

// Clockwise gaps between adjacent ids, as fractions; one entry per id.
std::vector<double> ring_gaps(const RingSet& ring);

// Median over samples of ln ln(1/d). For ids placed uniformly at
// random the result lands within an additive constant of ln ln n, and
// stays there even when an adversary withholds a subset of its ids.
// Samples must lie in (0,1).
double estimate_loglog_n(std::span<const double> gap_samples);

}  // namespace tinygroups
