#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "tinygroups/input_graph.hpp"
#include "tinygroups/rng.hpp"

using namespace tinygroups;

namespace {

RingSet ring_of(std::initializer_list<double> fracs) {
  std::vector<IdPoint> pts;
  for (double f : fracs) pts.push_back(IdPoint::from_fraction(f));
  return RingSet::from_points(std::move(pts));
}

// Brute-force neighbor oracle: predecessor plus the successor of every
// finger point, deduplicated, self removed. Independent of the
// adjacency the graph itself builds.
std::set<IdPoint> brute_neighbors(const RingSet& ring, IdPoint w) {
  std::set<IdPoint> out;
  out.insert(ring.predecessor(w));
  for (int i = 1; i <= 64; ++i) {
    out.insert(ring.successor(w.offset(1ULL << (i - 1))));
  }
  out.erase(w);
  return out;
}

std::vector<IdPoint> key_probes(const RingSet& ring, Rng& rng) {
  std::vector<IdPoint> keys;
  for (IdPoint p : ring.points()) {
    keys.push_back(p);
    keys.push_back(IdPoint{p.value + 1});
    keys.push_back(IdPoint{p.value - 1});
  }
  for (int i = 0; i < 32; ++i) keys.push_back(IdPoint{rng.next()});
  return keys;
}

}  // namespace

TEST_CASE("four-point ring matches the brute-force neighbor oracle") {
  RingSet ring = ring_of({0.0, 0.25, 0.5, 0.75});
  InputGraph g = InputGraph::build(ring);
  std::set<IdPoint> expect = brute_neighbors(g.ids(), IdPoint::from_fraction(0.0));
  std::set<IdPoint> expect_manual{IdPoint::from_fraction(0.75), IdPoint::from_fraction(0.25),
                                  IdPoint::from_fraction(0.5)};
  CHECK(expect == expect_manual);
  auto got = g.neighbor_set(IdPoint::from_fraction(0.0));
  CHECK(std::set<IdPoint>(got.begin(), got.end()) == expect_manual);
}

TEST_CASE("two ids link only to each other") {
  Rng rng(5);
  RingSet ring = RingSet::random(2, rng);
  InputGraph g = InputGraph::build(ring);
  for (uint32_t i = 0; i < 2; ++i) {
    REQUIRE(g.degree(i) == 1);
    CHECK(g.neighbors_of(i)[0] == 1 - i);
  }
}

TEST_CASE("single-id rings are rejected") {
  CHECK_THROWS(InputGraph::build(ring_of({0.5})));
}

TEST_CASE("neighbor sets always match the brute-force oracle") {
  Rng rng(99);
  for (size_t n : {4, 9, 33, 128}) {
    RingSet ring = RingSet::random(n, rng);
    InputGraph g = InputGraph::build(ring);
    for (size_t i = 0; i < n; ++i) {
      IdPoint w = g.ids().at(i);
      auto got = g.neighbor_set(w);
      CHECK(std::set<IdPoint>(got.begin(), got.end()) == brute_neighbors(g.ids(), w));
    }
  }
  CHECK_THROWS(InputGraph::build(ring_of({0.1, 0.2})).neighbor_set(IdPoint{12345}));
}

TEST_CASE("degrees stay logarithmic") {
  const size_t n = 256;
  const double log2n = std::log2(static_cast<double>(n));
  for (int seed = 0; seed < 100; ++seed) {
    Rng rng = Rng::derive(31, "degree", seed);
    InputGraph g = InputGraph::build(RingSet::random(n, rng));
    for (size_t i = 0; i < n; ++i) {
      CHECK(g.degree(i) >= static_cast<size_t>(log2n) - 2);
      CHECK(g.degree(i) <= static_cast<size_t>(3.0 * log2n));
    }
  }
}

TEST_CASE("removing a far id only changes the set if it was a target") {
  Rng rng(123);
  RingSet ring = RingSet::random(24, rng);
  InputGraph g = InputGraph::build(ring);
  IdPoint w = g.ids().at(0);
  auto before = brute_neighbors(g.ids(), w);
  for (size_t victim = 1; victim < ring.size(); ++victim) {
    std::vector<IdPoint> pts = ring.points();
    IdPoint gone = pts[victim];
    pts.erase(pts.begin() + static_cast<long>(victim));
    RingSet smaller = RingSet::from_points(pts);
    auto after = brute_neighbors(smaller, w);
    if (before.count(gone) == 0) {
      CHECK(after == before);  // non-neighbors cannot perturb the set
    } else {
      CHECK(after != before);
    }
  }
}

TEST_CASE("routing resolves to the successor on every small ring") {
  for (size_t n : {2, 3, 5, 8, 13, 24, 40, 64}) {
    for (int seed = 0; seed < 3; ++seed) {
      Rng rng = Rng::derive(1000 + n, "exhaustive", seed);
      InputGraph g = InputGraph::build(RingSet::random(n, rng));
      std::vector<IdPoint> keys = key_probes(g.ids(), rng);
      for (size_t o = 0; o < n; ++o) {
        for (IdPoint key : keys) {
          SearchTrace tr = g.route_from(static_cast<uint32_t>(o), key);
          CHECK(tr.resolved == g.ids().successor(key));
          CHECK(tr.path.size() <= static_cast<size_t>(g.max_hops()));
          CHECK(tr.path.front() == o);
        }
      }
    }
  }
}

TEST_CASE("route from the resolved id is a single group") {
  Rng rng(17);
  InputGraph g = InputGraph::build(RingSet::random(32, rng));
  IdPoint key{rng.next()};
  IdPoint owner = g.ids().successor(key);
  SearchTrace tr = g.route(owner, key);
  CHECK(tr.path.size() == 1);
  CHECK(tr.resolved == owner);
}

TEST_CASE("hand-simulated route on the four-point ring") {
  InputGraph g = InputGraph::build(ring_of({0.0, 0.25, 0.5, 0.75}));
  SearchTrace tr = g.route(IdPoint::from_fraction(0.0), IdPoint::from_fraction(0.6));
  CHECK(tr.resolved == IdPoint::from_fraction(0.75));
  // 0 holds 0.75 as its predecessor link, so the greedy rule jumps
  // there in one hop.
  REQUIRE(tr.path.size() == 2);
  CHECK(g.ids().at(tr.path[1]) == IdPoint::from_fraction(0.75));
}

TEST_CASE("paths stay within twice log2 n") {
  for (size_t n : {256, 1024}) {
    Rng build_rng = Rng::derive(4, "hopring", n);
    InputGraph g = InputGraph::build(RingSet::random(n, build_rng));
    Rng rng = Rng::derive(5, "hops", n);
    size_t max_len = 0;
    for (int t = 0; t < 10000; ++t) {
      uint32_t origin = static_cast<uint32_t>(rng.index(n));
      SearchTrace tr = g.route_from(origin, IdPoint{rng.next()});
      max_len = std::max(max_len, tr.path.size());
    }
    CHECK(max_len <= static_cast<size_t>(2.0 * std::log2(static_cast<double>(n))));
  }
}

TEST_CASE("congestion on two ids and determinism") {
  Rng rng(8);
  InputGraph g = InputGraph::build(RingSet::random(2, rng));
  Rng m1 = Rng::derive(9, "cong");
  auto freq = g.measure_congestion(4000, m1);
  CHECK(freq[0] >= 0.5);
  CHECK(freq[1] >= 0.5);

  Rng m2 = Rng::derive(9, "cong");
  CHECK(g.measure_congestion(4000, m2) == freq);
}

TEST_CASE("congestion at n=1024 is reported against the quadratic envelope") {
  const size_t n = 1024;
  Rng rng(44);
  InputGraph g = InputGraph::build(RingSet::random(n, rng));
  Rng m = Rng::derive(45, "cong1024");
  auto freq = g.measure_congestion(100000, m);
  double chat = *std::max_element(freq.begin(), freq.end());
  double log2n = std::log2(static_cast<double>(n));
  double kappa = chat * static_cast<double>(n) / (log2n * log2n);
  MESSAGE("empirical congestion ", chat, " fitted kappa ", kappa);
  CHECK(kappa > 0.0);
  CHECK(chat <= 6.0 * log2n * log2n / static_cast<double>(n));  // generous sanity ceiling
}

TEST_CASE("load shares partition the key space") {
  InputGraph g = InputGraph::build(ring_of({0.0, 0.25, 0.5, 0.75}));
  for (IdPoint p : g.ids().points()) {
    CHECK(g.load_share(p) == doctest::Approx(0.25).epsilon(1e-12));
  }
  Rng rng(6);
  InputGraph big = InputGraph::build(RingSet::random(4096, rng));
  double total = 0.0, max_share = 0.0, sampled = 0.0;
  Rng pick(7);
  for (IdPoint p : big.ids().points()) {
    double s = big.load_share(p);
    total += s;
    max_share = std::max(max_share, s);
  }
  for (int i = 0; i < 64; ++i) {
    sampled += big.load_share(big.ids().at(pick.index(4096)));
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(max_share <= 4.0 * std::log(4096.0) / 4096.0);
  CHECK(sampled / 64.0 <= 3.0 / 4096.0);  // a sampled id owns O(1/N) on average
}

TEST_CASE("neighbor claims verify through searches") {
  Rng rng(21);
  InputGraph g = InputGraph::build(RingSet::random(48, rng));
  for (size_t i = 0; i < 8; ++i) {
    IdPoint w = g.ids().at(i * 5);
    for (IdPoint u : g.neighbor_set(w)) {
      CHECK(g.verify_neighbor_claim(u, w));
    }
    CHECK_FALSE(g.verify_neighbor_claim(w, w));
    // An id owning no finger of w and not adjacent to it must fail.
    for (size_t probe = 0; probe < g.size(); ++probe) {
      IdPoint u = g.ids().at(probe);
      auto nbs = g.neighbor_set(w);
      bool is_neighbor = std::find(nbs.begin(), nbs.end(), u) != nbs.end();
      CHECK(g.verify_neighbor_claim(u, w) == (is_neighbor && u != w));
    }
  }
  CHECK_FALSE(g.verify_neighbor_claim(IdPoint{1}, g.ids().at(0)));
}

TEST_CASE("reverse neighbor census stays polylogarithmic") {
  const size_t n = 1024;
  Rng rng(2718);
  InputGraph g = InputGraph::build(RingSet::random(n, rng));
  std::vector<size_t> incoming(n, 0);
  for (uint32_t i = 0; i < n; ++i) {
    for (uint32_t j : g.neighbors_of(i)) incoming[j]++;
  }
  double log2n = std::log2(static_cast<double>(n));
  size_t worst = *std::max_element(incoming.begin(), incoming.end());
  MESSAGE("max reverse-neighbor count ", worst);
  CHECK(worst <= static_cast<size_t>(6.0 * log2n * std::log(log2n) + 24));
}

TEST_CASE("properties survive adversarial deletion of a bad subset") {
  const size_t n = 256;
  const double beta = 0.1;
  Rng rng(31415);
  RingSet ring = RingSet::random(n, rng);

  auto rebuilt_ok = [&](const std::vector<IdPoint>& survivors) {
    InputGraph g = InputGraph::build(RingSet::from_points(survivors));
    Rng probe(555);
    size_t m = g.size();
    for (int t = 0; t < 2000; ++t) {
      uint32_t o = static_cast<uint32_t>(probe.index(m));
      IdPoint key{probe.next()};
      SearchTrace tr = g.route_from(o, key);
      if (tr.resolved != g.ids().successor(key)) return false;
      if (tr.path.size() > 2.5 * std::log2(static_cast<double>(m)) + 4) return false;
    }
    return true;
  };

  size_t cut = static_cast<size_t>(beta * n);
  // lowest-fraction rule
  std::vector<IdPoint> lowest(ring.points().begin() + static_cast<long>(cut),
                              ring.points().end());
  CHECK(rebuilt_ok(lowest));
  // random-fraction rule
  std::vector<IdPoint> randomcut;
  Rng pick(1);
  std::set<size_t> victims;
  while (victims.size() < cut) victims.insert(pick.index(n));
  for (size_t i = 0; i < n; ++i) {
    if (victims.count(i) == 0) randomcut.push_back(ring.at(i));
  }
  CHECK(rebuilt_ok(randomcut));
  // one contiguous arc
  std::vector<IdPoint> arc;
  for (IdPoint p : ring.points()) {
    if (p.value < (3ULL << 61) || p.value >= (7ULL << 61)) arc.push_back(p);
  }
  CHECK(rebuilt_ok(arc));
}

TEST_CASE("adjacency serializes as id plus neighbor list") {
  InputGraph g = InputGraph::build(ring_of({0.0, 0.5}));
  std::string json = g.to_adjacency_json();
  CHECK(json.find("\"id\"") != std::string::npos);
  CHECK(json.find("\"neighbors\"") != std::string::npos);
  CHECK(json.find(IdPoint::from_fraction(0.5).to_hex()) != std::string::npos);
}
