#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>
#include <vector>

#include "tinygroups/gossip.hpp"
#include "tinygroups/hashing.hpp"

using namespace tinygroups;

namespace {

struct World {
  std::shared_ptr<const InputGraph> base;
  GroupGraph graph;
};

World make_world(size_t n, uint64_t seed, size_t slots = 16) {
  Rng rng = Rng::derive(seed, "gossip-world");
  auto base = std::make_shared<const InputGraph>(InputGraph::build(RingSet::random(n, rng)));
  std::vector<Allegiance> table(n, Allegiance::good);
  GroupGraph q = GroupGraph::build_direct(base, "g1", slots, table);
  return {base, std::move(q)};
}

uint64_t units_of(double frac) { return static_cast<uint64_t>(frac * 0x1.0p64); }

StringMsg msg_with(std::vector<uint8_t> s, std::span<const uint8_t> r, uint32_t origin) {
  StringMsg m;
  m.s = std::move(s);
  m.t_units = hash64("gossip-h", [&] {
    std::vector<uint8_t> x(std::max(m.s.size(), r.size()), 0);
    for (size_t i = 0; i < m.s.size(); ++i) x[i] ^= m.s[i];
    for (size_t i = 0; i < r.size(); ++i) x[i] ^= r[i];
    return x;
  }());
  m.origin = origin;
  return m;
}

}  // namespace

TEST_CASE("bin indices follow the dyadic intervals") {
  CHECK(bin_index(units_of(0.3), 20) == 2);    // [1/4, 1/2)
  CHECK(bin_index(units_of(0.5), 20) == 1);    // left-closed boundary
  CHECK(bin_index(units_of(1.5 / 1024.0), 20) == 10);
  CHECK(bin_index(0, 20) == 20);               // zero sinks to the deepest bin
  CHECK(bin_index(1, 20) == 20);               // underflow collapses into the last bin
  CHECK(bin_index(units_of(0.999), 20) == 1);
  CHECK_THROWS(bin_index(5, 0));
}

TEST_CASE("record-breaker gate forwards strictly better strings under the cap") {
  std::vector<uint8_t> r(8, 0x5a);
  BinTable table(16, 3);

  StringMsg first = msg_with({1, 2, 3, 4, 5, 6, 7, 8}, r, 0);
  CHECK(table.offer(first, r) == OfferResult::forward);  // vacuous record

  SUBCASE("equal output drops") {
    CHECK(table.offer(first, r) == OfferResult::drop);
  }
  SUBCASE("mangled output is invalid") {
    StringMsg bogus = first;
    bogus.t_units ^= 1;
    CHECK(table.offer(bogus, r) == OfferResult::invalid);
  }
  SUBCASE("the counter cap silences a full bin") {
    uint32_t bin = bin_index(first.t_units, 16);
    // Feed strictly improving strings into the same bin until capped.
    int forwards = 1;
    Rng rng(7);
    StringMsg best = first;
    for (int i = 0; i < 4000 && forwards < 3; ++i) {
      std::vector<uint8_t> s(8);
      for (auto& b : s) b = static_cast<uint8_t>(rng.next() & 0xff);
      StringMsg m = msg_with(std::move(s), r, 1);
      if (bin_index(m.t_units, 16) != bin || m.t_units >= best.t_units) continue;
      CHECK(table.offer(m, r) == OfferResult::forward);
      best = m;
      forwards++;
    }
    REQUIRE(forwards == 3);
    // The next improvement in this bin must be dropped by the cap.
    for (int i = 0; i < 20000; ++i) {
      std::vector<uint8_t> s(8);
      for (auto& b : s) b = static_cast<uint8_t>(rng.next() & 0xff);
      StringMsg m = msg_with(std::move(s), r, 1);
      if (bin_index(m.t_units, 16) != bin || m.t_units >= best.t_units) continue;
      CHECK(table.offer(m, r) == OfferResult::drop);
      break;
    }
  }
}

TEST_CASE("solution sets collect from the deepest bin upward") {
  std::vector<uint8_t> r(8, 0);
  BinTable table(16, 64);
  Rng rng(9);
  std::vector<StringMsg> accepted;
  for (int i = 0; i < 512; ++i) {
    std::vector<uint8_t> s(8);
    for (auto& b : s) b = static_cast<uint8_t>(rng.next() & 0xff);
    StringMsg m = msg_with(std::move(s), r, 2);
    if (table.offer(m, r) == OfferResult::forward) accepted.push_back(m);
  }
  REQUIRE(accepted.size() >= 6);
  uint64_t global_min = UINT64_MAX;
  for (const auto& m : accepted) global_min = std::min(global_min, m.t_units);

  auto set5 = table.assemble_solution_set(5);
  REQUIRE(set5.size() == 5);
  CHECK(set5.front().t_units == global_min);  // smallest output first
  for (size_t i = 1; i < set5.size(); ++i) {
    CHECK(set5[i - 1].t_units <= set5[i].t_units);
  }
  auto all = table.assemble_solution_set(100000);
  CHECK(all.size() <= accepted.size());

  BinTable empty(16, 4);
  CHECK_THROWS_WITH(empty.assemble_solution_set(5), "no strings observed");
}

TEST_CASE("phase clock partitions the first half epoch") {
  PhaseClock clock = make_phase_clock(4096, 24);
  CHECK(clock.phase1_end == 2048 - 48);
  CHECK(clock.phase2_end == 2048 - 24);
  CHECK(clock.phase3_end == 2048);
  CHECK(clock.phase_at(0) == 1);
  CHECK(clock.phase_at(clock.phase1_end) == 2);
  CHECK(clock.phase_at(clock.phase2_end) == 3);
  CHECK(clock.phase_at(clock.phase3_end) == 0);
  CHECK_THROWS(make_phase_clock(64, 32));
}

TEST_CASE("giant component covers everything when all groups are blue") {
  World w = make_world(64, 30);
  w.graph.mark_all_blue();
  auto comp = giant_component(w.graph);
  CHECK(comp.size() == 64);
}

TEST_CASE("giant component excludes red groups and stays large at small p_f") {
  World w = make_world(256, 31);
  Rng colors(32);
  w.graph.mark_colors_synthetic(0.02, colors);
  auto comp = giant_component(w.graph);
  CHECK(comp.size() <= w.graph.size() - w.graph.red_count());
  CHECK(comp.size() >= 4 * w.graph.size() / 5);
  for (uint32_t idx : comp) CHECK(w.graph.is_blue(idx));
}

TEST_CASE("without an adversary every good id agrees on the minimum") {
  World w = make_world(128, 33);
  w.graph.mark_all_blue();
  GossipParams gp;
  gp.T = 1024;
  gp.string_bits = 64;
  std::vector<uint8_t> r(8, 0x11);
  GossipResult res = run_gossip(w.graph, gp, AdversaryStrategy::none(), r, 900);
  REQUIRE(res.component.size() == 128);

  // Centralized oracle: replay every generator stream and take the
  // true global minimum of all phase-1 strings.
  uint64_t oracle_min = UINT64_MAX;
  PhaseClock clock = make_phase_clock(gp.T, res.d_prime_ln_n);
  for (uint32_t i = 0; i < 128; ++i) {
    Rng gen = Rng::derive(900, "gossip-gen", i);
    for (uint64_t step = 0; step < clock.phase1_end; ++step) {
      std::vector<uint8_t> s(8);
      for (auto& b : s) b = static_cast<uint8_t>(gen.next() & 0xff);
      StringMsg m = msg_with(std::move(s), r, i);
      oracle_min = std::min(oracle_min, m.t_units);
    }
  }
  for (uint32_t i : res.component) {
    REQUIRE(res.s_star[i].has_value());
    CHECK(res.s_star[i]->t_units == oracle_min);
  }
  CHECK(res.agreement(w.graph));
  CHECK_FALSE(res.adversary_injected);
}

TEST_CASE("a delayed release still lands in every solution set") {
  World w = make_world(256, 34);
  Rng colors(35);
  w.graph.mark_colors_synthetic(0.03, colors);
  GossipParams gp;
  gp.T = 2048;
  gp.string_bits = 64;
  std::vector<uint8_t> r(8, 0x77);
  AdversaryStrategy adv;
  adv.gossip = GossipBehavior::delay_release;
  GossipResult res = run_gossip(w.graph, gp, adv, r, 901);
  REQUIRE(res.component.size() > 128);
  REQUIRE(res.adversary_injected);

  // The injected string reached only part of the component by the end
  // of phase 2; phase 3 spreads it into every solution set.
  size_t holders = 0;
  for (uint32_t i : res.component) {
    REQUIRE(res.s_star[i].has_value());
    holders += res.s_star[i]->s == res.injected.s;
  }
  MESSAGE("injected string chosen by ", holders, " of ", res.component.size());
  CHECK(res.agreement(w.graph));

  if (holders > 0 && holders < res.component.size()) {
    // Genuine disagreement on the chosen string, resolved by sets.
    for (uint32_t i : res.component) {
      bool found = false;
      for (const auto& m : res.solution_sets[i]) found = found || m.s == res.injected.s;
      CHECK(found);
    }
  }
}

TEST_CASE("per-id forwards respect the counter-cap arithmetic") {
  World w = make_world(128, 36);
  w.graph.mark_all_blue();
  GossipParams gp;
  gp.T = 1024;
  gp.string_bits = 64;
  std::vector<uint8_t> r(8, 0x3c);
  GossipResult res = run_gossip(w.graph, gp, AdversaryStrategy::none(), r, 902);
  double cap = std::ceil(gp.c0 * std::log(128.0));
  double bins = std::ceil(gp.b * std::log(128.0 * static_cast<double>(gp.T)));
  CHECK(static_cast<double>(res.total_forward_events) <=
        static_cast<double>(w.graph.size()) * cap * bins);
}

TEST_CASE("solution sets never exceed their configured size") {
  World w = make_world(128, 37);
  w.graph.mark_all_blue();
  GossipParams gp;
  gp.T = 1024;
  gp.d0 = 2.0;
  gp.string_bits = 64;
  std::vector<uint8_t> r(8, 0x42);
  GossipResult res = run_gossip(w.graph, gp, AdversaryStrategy::none(), r, 903);
  size_t cap = static_cast<size_t>(std::ceil(gp.d0 * std::log(128.0)));
  for (uint32_t i : res.component) {
    CHECK(res.solution_sets[i].size() <= cap);
    CHECK_FALSE(res.solution_sets[i].empty());
  }
}

TEST_CASE("gossip messages are charged with the member product") {
  World w = make_world(32, 38, 4);  // groups of 4 members
  w.graph.mark_all_blue();
  GossipParams gp;
  gp.T = 512;
  gp.string_bits = 64;
  std::vector<uint8_t> r(8, 0x01);
  uint64_t before = w.graph.ledger().gossip;
  GossipResult res = run_gossip(w.graph, gp, AdversaryStrategy::none(), r, 904);
  CHECK(w.graph.ledger().gossip - before == res.total_messages);
  CHECK(res.total_messages >= res.total_forward_events * 4 * 4);
}

TEST_CASE("the global minimum is never silenced by a healthy cap") {
  // c0 over the configured floor: the smallest string always reaches
  // every component member's table.
  World w = make_world(128, 39);
  Rng colors(40);
  w.graph.mark_colors_synthetic(0.02, colors);
  GossipParams gp;
  gp.T = 1024;
  gp.string_bits = 64;
  std::vector<uint8_t> r(8, 0x66);
  GossipResult res = run_gossip(w.graph, gp, AdversaryStrategy::none(), r, 905);
  uint64_t global_min = UINT64_MAX;
  for (uint32_t i : res.component) {
    if (res.s_star[i].has_value()) global_min = std::min(global_min, res.s_star[i]->t_units);
  }
  for (uint32_t i : res.component) {
    REQUIRE_FALSE(res.solution_sets[i].empty());
    CHECK(res.solution_sets[i].front().t_units == global_min);
  }
}
