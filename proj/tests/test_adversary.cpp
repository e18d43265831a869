#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <memory>
#include <set>
#include <vector>

#include "tinygroups/adversary.hpp"
#include "tinygroups/group_graph.hpp"
#include "tinygroups/input_graph.hpp"

using namespace tinygroups;

namespace {

std::vector<IdPoint> bad_pool(size_t count, uint64_t seed) {
  Rng rng = Rng::derive(seed, "badpool");
  std::set<IdPoint> out;
  while (out.size() < count) out.insert(IdPoint{rng.next()});
  return {out.begin(), out.end()};
}

}  // namespace

TEST_CASE("strategy names parse") {
  CHECK(parse_strategy("none").search == SearchBehavior::drop);
  CHECK(parse_strategy("worst").search == SearchBehavior::misroute_to_red);
  CHECK(parse_strategy("worst").requests == RequestBehavior::spam_memberships);
  CHECK(parse_strategy("worst").gossip == GossipBehavior::delay_release);
  CHECK(parse_strategy("worst").pow == PowBehavior::bias_small_outputs);
  CHECK(parse_strategy("spam_only").requests == RequestBehavior::spam_memberships);
  CHECK(parse_strategy("delay_only").gossip == GossipBehavior::delay_release);
  CHECK_THROWS(parse_strategy("sneaky"));
}

TEST_CASE("id subset rules") {
  auto pool = bad_pool(100, 1);
  Rng rng(2);
  auto all = select_id_subset(pool, IdSubsetRule::all, rng);
  CHECK(all.size() == 100);

  auto arc = select_id_subset(pool, IdSubsetRule::contiguous_arc, rng);
  for (IdPoint p : arc) CHECK(p.value < (1ULL << 63));
  size_t in_arc = 0;
  for (IdPoint p : pool) in_arc += p.value < (1ULL << 63);
  CHECK(arc.size() == in_arc);

  auto lowest = select_id_subset(pool, IdSubsetRule::lowest_fraction, rng);
  CHECK(lowest.size() == 50);
  for (IdPoint p : lowest) CHECK(p <= pool[49]);

  auto half = select_id_subset(pool, IdSubsetRule::random_half, rng);
  CHECK(half.size() < 100);
  CHECK(half.size() > 20);
}

TEST_CASE("input graph properties survive every omission rule") {
  const size_t n = 256;
  Rng good_rng(3);
  std::vector<IdPoint> goods;
  for (size_t i = 0; i < n - n / 10; ++i) goods.push_back(IdPoint{good_rng.next()});
  auto bads = bad_pool(n / 10, 4);

  for (IdSubsetRule rule : {IdSubsetRule::all, IdSubsetRule::random_half,
                            IdSubsetRule::contiguous_arc, IdSubsetRule::lowest_fraction}) {
    Rng adv(5);
    auto kept = select_id_subset(bads, rule, adv);
    std::vector<IdPoint> pts = goods;
    pts.insert(pts.end(), kept.begin(), kept.end());
    InputGraph g = InputGraph::build(RingSet::from_points(pts));
    Rng probe = Rng::derive(6, "probe", static_cast<uint64_t>(rule));
    for (int t = 0; t < 1500; ++t) {
      uint32_t o = static_cast<uint32_t>(probe.index(g.size()));
      IdPoint key{probe.next()};
      SearchTrace tr = g.route_from(o, key);
      CHECK(tr.resolved == g.ids().successor(key));
      CHECK(tr.path.size() <= 2.0 * std::log2(static_cast<double>(g.size())) + 4);
    }
    // P3 spot check: claimed neighbors re-verify by searches.
    IdPoint w = g.ids().at(g.size() / 2);
    for (IdPoint u : g.neighbor_set(w)) CHECK(g.verify_neighbor_claim(u, w));
  }
}

TEST_CASE("red-group behavior cannot move measured outcomes") {
  const size_t n = 256;
  Rng rng(7);
  auto base = std::make_shared<const InputGraph>(InputGraph::build(RingSet::random(n, rng)));
  std::vector<Allegiance> table(n, Allegiance::good);
  GroupGraph q = GroupGraph::build_direct(base, "g1", 12, table);
  Rng colors(8);
  q.mark_colors_synthetic(0.05, colors);

  // The measured search halts at the first red group by definition;
  // what the adversary does with the stranded request afterwards can
  // only change message ledgers, never outcomes.
  Rng t1 = Rng::derive(9, "trials");
  auto drop_stats = q.run_search_trials(5000, t1);
  Rng t2 = Rng::derive(9, "trials");
  auto again = q.run_search_trials(5000, t2);
  CHECK(drop_stats.failed == again.failed);
  CHECK(drop_stats.traversals == again.traversals);

  AdversaryStrategy drop;
  drop.search = SearchBehavior::drop;
  AdversaryStrategy misroute;
  misroute.search = SearchBehavior::misroute_to_red;
  RedGroupAction a = act_on_search(drop, 1, 2, 10);
  RedGroupAction b = act_on_search(misroute, 1, 2, 10);
  CHECK(a.dropped);
  CHECK(b.dropped);  // the request is lost either way
  CHECK(a.extra_red_hops == 0);
  CHECK(b.extra_red_hops >= 1);  // misrouting burns messages among red groups
  RedGroupAction lone = act_on_search(misroute, 1, 2, 1);
  CHECK(lone.extra_red_hops == 0);  // nowhere to shuttle with a single red group
}

TEST_CASE("spam volume follows the configured multiple of organic load") {
  AdversaryStrategy s;
  s.requests = RequestBehavior::spam_memberships;
  s.spam_factor = 10.0;
  auto bads = bad_pool(5, 10);
  auto reqs = spam_requests(s, 77, bads, IdPoint{123}, 47);
  CHECK(reqs.size() == 470);
  for (const auto& r : reqs) {
    CHECK_FALSE(r.neighbor_request);
    bool from_pool = false;
    for (IdPoint b : bads) from_pool = from_pool || b == r.claimed_group;
    CHECK(from_pool);
  }
  // Deterministic in (seed, victim).
  auto reqs2 = spam_requests(s, 77, bads, IdPoint{123}, 47);
  CHECK(reqs.size() == reqs2.size());
  for (size_t i = 0; i < reqs.size(); ++i) {
    CHECK(reqs[i].hash_point == reqs2[i].hash_point);
  }
  AdversaryStrategy quiet;
  CHECK(spam_requests(quiet, 77, bads, IdPoint{123}, 47).empty());
}
