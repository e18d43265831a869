#include "tinygroups/idring.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tinygroups {

IdPoint IdPoint::from_fraction(double f) {
  if (f < 0.0 || f >= 1.0) throw std::invalid_argument("fraction outside [0,1)");
  return IdPoint{static_cast<uint64_t>(f * 0x1.0p64)};
}

IdPoint IdPoint::from_hex(std::string_view hex) {
  if (hex.size() != 16) throw std::invalid_argument("id hex must be 16 digits");
  uint64_t v = 0;
  for (char c : hex) {
    int d;
    if (c >= '0' && c <= '9') d = c - '0';
    else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
    else throw std::invalid_argument("bad id hex digit");
    v = (v << 4) | static_cast<uint64_t>(d);
  }
  return IdPoint{v};
}

std::string IdPoint::to_hex() const {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  uint64_t v = value;
  for (int i = 15; i >= 0; --i) {
    s[static_cast<size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

RingSet RingSet::from_points(std::vector<IdPoint> pts) {
  std::sort(pts.begin(), pts.end());
  if (std::adjacent_find(pts.begin(), pts.end()) != pts.end()) {
    throw std::invalid_argument("duplicate id point");
  }
  return RingSet(std::move(pts));
}

RingSet RingSet::random(size_t n, Rng& rng) {
  std::vector<IdPoint> pts;
  pts.reserve(n);
  for (size_t i = 0; i < n; ++i) pts.push_back(IdPoint{rng.next()});
  std::sort(pts.begin(), pts.end());
  // 64-bit collisions are vanishingly rare at desk scale; resample and
  // re-sort if one shows up so the draw stays deterministic.
  while (std::adjacent_find(pts.begin(), pts.end()) != pts.end()) {
    auto it = std::adjacent_find(pts.begin(), pts.end());
    *it = IdPoint{rng.next()};
    std::sort(pts.begin(), pts.end());
  }
  return RingSet(std::move(pts));
}

size_t RingSet::successor_index(IdPoint x) const {
  if (points_.empty()) throw std::runtime_error("empty ID space");
  auto it = std::lower_bound(points_.begin(), points_.end(), x);
  if (it == points_.end()) it = points_.begin();  // wrap
  return static_cast<size_t>(it - points_.begin());
}

size_t RingSet::predecessor_index(size_t i) const {
  if (points_.empty()) throw std::runtime_error("empty ID space");
  return (i + points_.size() - 1) % points_.size();
}

IdPoint RingSet::predecessor(IdPoint w) const {
  size_t i = index_of(w);
  return points_[predecessor_index(i)];
}

bool RingSet::contains(IdPoint p) const {
  return std::binary_search(points_.begin(), points_.end(), p);
}

size_t RingSet::index_of(IdPoint p) const {
  auto it = std::lower_bound(points_.begin(), points_.end(), p);
  if (it == points_.end() || *it != p) throw std::invalid_argument("id not in ring");
  return static_cast<size_t>(it - points_.begin());
}

std::vector<double> ring_gaps(const RingSet& ring) {
  if (ring.size() < 2) throw std::invalid_argument("ring_gaps needs at least 2 ids");
  const auto& pts = ring.points();
  std::vector<double> gaps;
  gaps.reserve(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) {
    size_t j = (i + 1) % pts.size();
    gaps.push_back(clockwise_distance(pts[i], pts[j]));
  }
  return gaps;
}

double estimate_loglog_n(std::span<const double> gap_samples) {
  if (gap_samples.empty()) throw std::invalid_argument("no distance samples");
  std::vector<double> vals;
  vals.reserve(gap_samples.size());
  for (double d : gap_samples) {
    if (!(d > 0.0) || !(d < 1.0)) throw std::invalid_argument("distance outside (0,1)");
    vals.push_back(std::log(std::log(1.0 / d)));
  }
  size_t mid = vals.size() / 2;
  std::nth_element(vals.begin(), vals.begin() + static_cast<long>(mid), vals.end());
  double hi = vals[mid];
  if (vals.size() % 2 == 1) return hi;
  double lo = *std::max_element(vals.begin(), vals.begin() + static_cast<long>(mid));
  return 0.5 * (lo + hi);
}

}  // namespace tinygroups
