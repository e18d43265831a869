#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "tinygroups/idring.hpp"
#include "tinygroups/rng.hpp"

using namespace tinygroups;

namespace {

RingSet ring_of(std::initializer_list<double> fracs) {
  std::vector<IdPoint> pts;
  for (double f : fracs) pts.push_back(IdPoint::from_fraction(f));
  return RingSet::from_points(std::move(pts));
}

}  // namespace

TEST_CASE("successor walks clockwise and wraps") {
  RingSet ring = ring_of({0.2, 0.5, 0.9});
  CHECK(ring.successor(IdPoint::from_fraction(0.6)) == IdPoint::from_fraction(0.9));
  CHECK(ring.successor(IdPoint::from_fraction(0.95)) == IdPoint::from_fraction(0.2));
  CHECK(ring.successor(IdPoint::from_fraction(0.5)) == IdPoint::from_fraction(0.5));
}

TEST_CASE("successor of empty ring is an error") {
  RingSet empty;
  CHECK_THROWS(empty.successor(IdPoint{0}));
}

TEST_CASE("successor is idempotent") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    RingSet ring = RingSet::random(64, rng);
    for (int probe = 0; probe < 100; ++probe) {
      IdPoint x{rng.next()};
      IdPoint s = ring.successor(x);
      CHECK(ring.successor(s) == s);
    }
  }
}

TEST_CASE("duplicate points are rejected") {
  std::vector<IdPoint> pts{IdPoint{5}, IdPoint{9}, IdPoint{5}};
  CHECK_THROWS(RingSet::from_points(pts));
}

TEST_CASE("clockwise distance is modular") {
  CHECK(clockwise_distance(IdPoint::from_fraction(0.9), IdPoint::from_fraction(0.1)) ==
        doctest::Approx(0.2).epsilon(1e-12));
  CHECK(clockwise_distance(IdPoint{12345}, IdPoint{12345}) == 0.0);
  CHECK(clockwise_distance(IdPoint::from_fraction(0.25), IdPoint::from_fraction(0.75)) ==
        doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("opposite arcs cover the ring exactly") {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    IdPoint a{rng.next()}, b{rng.next()};
    if (a == b) continue;
    // Exact in raw units: the two arcs partition the 2^64 circle.
    CHECK(clockwise_units(a, b) + clockwise_units(b, a) == 0);  // wraps to 2^64
    CHECK(clockwise_units(a, b) != 0);
  }
}

TEST_CASE("hex serialization round-trips") {
  IdPoint p{0x0123456789abcdefULL};
  CHECK(p.to_hex() == "0123456789abcdef");
  CHECK(IdPoint::from_hex(p.to_hex()) == p);
  CHECK(IdPoint{0}.to_hex() == "0000000000000000");
  CHECK_THROWS(IdPoint::from_hex("123"));
  CHECK_THROWS(IdPoint::from_hex("012345678 abcdef"));
}

TEST_CASE("log-log estimate evaluates the formula exactly on equal gaps") {
  // All gaps 1/n for n = 2^20; the estimator reduces to ln ln n.
  std::vector<double> gaps(100, 1.0 / 1048576.0);
  double expect = std::log(std::log(1048576.0));
  CHECK(estimate_loglog_n(gaps) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(expect == doctest::Approx(2.63).epsilon(0.01));
}

TEST_CASE("log-log estimate rejects bad samples") {
  CHECK_THROWS(estimate_loglog_n(std::vector<double>{}));
  CHECK_THROWS(estimate_loglog_n(std::vector<double>{0.0}));
  CHECK_THROWS(estimate_loglog_n(std::vector<double>{1.0}));
  CHECK_THROWS(estimate_loglog_n(std::vector<double>{0.5, -0.1}));
}

TEST_CASE("log-log estimate concentrates for uniform ids") {
  // 1000 seeded rings of 1024 uniform ids; the estimate should land
  // within +-1.0 of ln ln 1024 in at least 99% of them.
  const double truth = std::log(std::log(1024.0));
  int within = 0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    Rng rng = Rng::derive(2024, "est-mc", t);
    RingSet ring = RingSet::random(1024, rng);
    double est = estimate_loglog_n(ring_gaps(ring));
    within += std::abs(est - truth) <= 1.0;
  }
  CHECK(within >= trials * 99 / 100);
}

TEST_CASE("log-log estimate survives adversarial omission of an arc") {
  // The adversary withholds every id in [0, 1/2); the survivors' gaps
  // still estimate ln ln n within a wider constant.
  const double truth = std::log(std::log(1024.0));
  int within = 0;
  const int trials = 400;
  for (int t = 0; t < trials; ++t) {
    Rng rng = Rng::derive(4048, "est-omit", t);
    RingSet full = RingSet::random(1024, rng);
    std::vector<IdPoint> kept;
    for (IdPoint p : full.points()) {
      if (p.value >= (1ULL << 63)) kept.push_back(p);
    }
    RingSet half = RingSet::from_points(std::move(kept));
    double est = estimate_loglog_n(ring_gaps(half));
    within += std::abs(est - truth) <= 1.5;
  }
  CHECK(within >= trials * 99 / 100);
}

TEST_CASE("every (lambda ln m)/m interval holds Theta(lambda ln m) ids") {
  // lambda = 12, m = 1024: intervals of length (12 ln m)/m should hold
  // between 6 ln m and 18 ln m ids nearly always.
  const size_t m = 1024;
  const double lambda = 12.0;
  const double lnm = std::log(static_cast<double>(m));
  const uint64_t width = static_cast<uint64_t>(lambda * lnm / m * 0x1.0p64);
  const double lo = lambda / 2.0 * lnm, hi = 3.0 * lambda / 2.0 * lnm;
  int bad_trials = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    Rng rng = Rng::derive(77, "spread", t);
    RingSet ring = RingSet::random(m, rng);
    bool ok = true;
    for (size_t i = 0; i < m; ++i) {
      IdPoint start = ring.at(i);
      // Count ids in (start, start+width] by index arithmetic.
      size_t j = ring.successor_index(IdPoint{start.value + 1});
      size_t count = 0;
      while (count < m) {
        uint64_t d = clockwise_units(start, ring.at(j));
        if (d == 0 || d > width) break;
        count++;
        j = (j + 1) % m;
      }
      if (count < lo || count > hi) {
        ok = false;
        break;
      }
    }
    bad_trials += !ok;
  }
  // The bound guarantees failure probability at most 2 m^-1 per trial.
  CHECK(bad_trials <= 2);
}

TEST_CASE("ring gaps sum to one") {
  Rng rng(3);
  RingSet ring = RingSet::random(256, rng);
  std::vector<double> gaps = ring_gaps(ring);
  REQUIRE(gaps.size() == 256);
  double total = 0;
  for (double g : gaps) total += g;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}
