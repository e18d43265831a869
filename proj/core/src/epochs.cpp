#include "tinygroups/epochs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include "tinygroups/hashing.hpp"

namespace tinygroups {

BootstrapSample sample_bootstrap(const GroupGraph& q, double c_b, Rng& rng) {
  double ln_n = std::log(static_cast<double>(q.size()));
  double lnln_n = std::log(ln_n);
  size_t want = static_cast<size_t>(std::ceil(c_b * ln_n / lnln_n));
  if (q.size() < want) throw std::invalid_argument("too few groups to sample a bootstrap");
  BootstrapSample out;
  std::set<uint32_t> picked;
  while (picked.size() < want) picked.insert(static_cast<uint32_t>(rng.index(q.size())));
  out.groups.assign(picked.begin(), picked.end());
  std::map<IdPoint, Allegiance> uni;
  for (uint32_t g : out.groups) {
    for (const auto& m : q.group(g).members) {
      if (m.alive) uni.emplace(m.id, m.allegiance);
    }
  }
  for (const auto& [id, a] : uni) {
    out.members.push_back(id);
    (a == Allegiance::good ? out.good_count : out.bad_count)++;
  }
  return out;
}

namespace {

constexpr uint32_t kPredSlot = 64;  // link slot reserved for the ring predecessor
constexpr int kMaxGraphs = 2;

struct LinkState {
  std::optional<IdPoint> candidate;
};

struct PendingGroup {
  IdPoint leader;
  uint32_t machine = 0;
  Allegiance leader_allegiance = Allegiance::good;
  uint32_t boot_ring_idx = 0;
  std::vector<GroupMember> members[kMaxGraphs];
  std::vector<uint32_t> owners[kMaxGraphs];
  std::vector<uint32_t> member_ring[kMaxGraphs];  // members' serving-ring indices
  size_t unfilled[kMaxGraphs] = {0, 0};
  uint32_t good_departures[kMaxGraphs] = {0, 0};
  std::vector<LinkState> links[kMaxGraphs];
  uint64_t attempt_counter = 0;

  // Link updates and verifications are executed by the group, and the
  // group acts through whichever member's position the request routes
  // from; successive attempts therefore take different paths.
  uint32_t next_origin(const std::vector<uint8_t>& machine_alive) {
    for (int g = 0; g < kMaxGraphs; ++g) {
      if (member_ring[g].empty()) continue;
      for (size_t probe = 0; probe < member_ring[g].size(); ++probe) {
        size_t pick = (attempt_counter++) % member_ring[g].size();
        uint32_t owner = owners[g][pick];
        if (machine_alive[owner]) return member_ring[g][pick];
      }
    }
    attempt_counter++;
    return boot_ring_idx;
  }
};

/**
 * Builds the new graph pair over one epoch: membership through dual
 * searches in the serving pair, link setup at join time, link updates
 * triggered by later joins, and a reconciliation sweep at the end.
 */
class NewPairBuilder {
 public:
  NewPairBuilder(const EpochParams& params, const InputGraph& old_base,
                 GroupGraph* old1, GroupGraph* old2,
                 const std::vector<uint32_t>& ring_machine,
                 const std::vector<Allegiance>& ring_allegiance,
                 const std::vector<uint8_t>* machine_alive, uint64_t seed, size_t slots)
      : params_(params),
        old_base_(old_base),
        ring_machine_(ring_machine),
        ring_allegiance_(ring_allegiance),
        machine_alive_(machine_alive),
        seed_(seed),
        slots_(slots) {
    old_[0] = old1;
    old_[1] = old2;
  }

  int searched_graphs() const { return old_[1] == nullptr ? 1 : 2; }
  int built_graphs() const { return searched_graphs(); }

  size_t joined() const { return groups_.size(); }
  uint64_t searches() const { return searches_; }
  uint64_t failures() const { return failures_; }
  uint64_t rejects() const { return rejects_; }
  uint64_t accepted_slots(int g) const {
    uint64_t total = 0;
    for (const auto& pg : groups_) total += pg.members[g].size();
    return total;
  }
  uint64_t unfilled_slots(int g) const {
    uint64_t total = 0;
    for (const auto& pg : groups_) total += pg.unfilled[g];
    return total;
  }

  const std::vector<PendingGroup>& pending() const { return groups_; }

  void add_join(IdPoint w, uint32_t machine, Allegiance allegiance, uint32_t boot);
  void apply_departure(uint32_t machine);
  bool departure_within_caps(uint32_t machine, double cap_fraction) const;
  void final_sweep();

  struct Finalized {
    std::shared_ptr<const InputGraph> base;
    std::vector<std::unique_ptr<GroupGraph>> graphs;
    std::vector<std::vector<std::vector<uint32_t>>> slot_owners;
    std::vector<uint32_t> ring_machine;
    std::vector<Allegiance> ring_allegiance;
    size_t confused[kMaxGraphs] = {0, 0};
    size_t bad_composition[kMaxGraphs] = {0, 0};
    // Census: member slots and linked groups per machine.
    std::map<uint32_t, size_t> machine_slots;
    std::map<uint32_t, size_t> machine_links;
  };
  Finalized finalize(const GroupSizePolicy& policy);

 private:
  bool alive(uint32_t machine) const { return (*machine_alive_)[machine] != 0; }

  IdPoint finger_target(IdPoint leader, uint32_t slot) const {
    return leader.offset(1ULL << slot);
  }

  bool transport_search(int g, uint32_t origin, IdPoint key, uint32_t* resolved);
  bool verify_membership_selfcheck(uint32_t candidate_ring_idx);
  std::optional<uint32_t> resolve_member(IdPoint point, uint32_t boot);
  bool verify_neighbor(IdPoint candidate_leader, IdPoint target_key);
  void attempt_link_update(size_t gi, int g, uint32_t slot, IdPoint truth);
  void setup_links(size_t gi);
  void update_affected_by(IdPoint v);
  void refresh_links(size_t gi);

  std::optional<IdPoint> ring_successor(IdPoint x) const {
    if (ring_.empty()) return std::nullopt;
    auto it = ring_.lower_bound(x);
    if (it == ring_.end()) it = ring_.begin();
    return *it;
  }

  std::optional<IdPoint> ring_strict_predecessor(IdPoint x) const {
    if (ring_.size() < 2) return std::nullopt;
    auto it = ring_.lower_bound(x);
    if (it == ring_.begin()) it = ring_.end();
    --it;
    if (*it == x) {
      if (it == ring_.begin()) it = ring_.end();
      --it;
    }
    return *it;
  }

  const EpochParams& params_;
  const InputGraph& old_base_;
  GroupGraph* old_[kMaxGraphs] = {nullptr, nullptr};
  const std::vector<uint32_t>& ring_machine_;
  const std::vector<Allegiance>& ring_allegiance_;
  const std::vector<uint8_t>* machine_alive_;
  uint64_t seed_;
  size_t slots_;

  std::set<IdPoint> ring_;
  std::vector<PendingGroup> groups_;
  std::map<IdPoint, size_t> index_of_leader_;
  std::multimap<IdPoint, std::pair<size_t, uint32_t>> target_index_;
  std::map<uint32_t, std::vector<size_t>> holder_groups_;  // machine -> pending indices

  std::vector<uint32_t> path_buf_;
  uint64_t searches_ = 0;
  uint64_t failures_ = 0;
  uint64_t rejects_ = 0;
};

bool NewPairBuilder::transport_search(int g, uint32_t origin, IdPoint key,
                                      uint32_t* resolved) {
  searches_++;
  GroupGraph& graph = *old_[g];
  old_base_.route_into(origin, key, path_buf_);
  uint64_t cost = 0;
  for (size_t i = 0; i < path_buf_.size(); ++i) {
    uint32_t cur = path_buf_[i];
    if (i > 0) {
      uint32_t prev = path_buf_[i - 1];
      cost += static_cast<uint64_t>(graph.group(prev).members.size()) *
              static_cast<uint64_t>(graph.group(cur).members.size());
    }
    if (!graph.is_blue(cur) || graph.group(cur).live_count() == 0) {
      failures_++;
      RedGroupAction act =
          act_on_search(params_.adversary, seed_, searches_, graph.red_count());
      uint64_t sz = graph.group(cur).members.size();
      graph.ledger().inter_group += cost + act.extra_red_hops * sz * sz;
      return false;
    }
  }
  graph.ledger().inter_group += cost;
  if (resolved != nullptr) *resolved = path_buf_.back();
  return true;
}

bool NewPairBuilder::verify_membership_selfcheck(uint32_t candidate_ring_idx) {
  // The solicited id owns the hash point's arc, so its verification
  // search starts and ends at its own group; it succeeds in a graph
  // iff that group is blue and still forwarding.
  int ok = 0;
  for (int g = 0; g < searched_graphs(); ++g) {
    GroupGraph& graph = *old_[g];
    uint64_t sz = graph.group(candidate_ring_idx).members.size();
    graph.ledger().group_internal += sz * sz;
    if (graph.is_blue(candidate_ring_idx) && graph.group(candidate_ring_idx).live_count() > 0) {
      ok++;
    }
  }
  return ok > 0;
}

std::optional<uint32_t> NewPairBuilder::resolve_member(IdPoint point, uint32_t boot) {
  std::optional<uint32_t> best;
  for (int g = 0; g < searched_graphs(); ++g) {
    uint32_t got = 0;
    if (!transport_search(g, boot, point, &got)) continue;
    if (!best.has_value() || clockwise_units(point, old_base_.ids().at(got)) <
                                 clockwise_units(point, old_base_.ids().at(*best))) {
      best = got;
    }
  }
  return best;
}

void NewPairBuilder::add_join(IdPoint w, uint32_t machine, Allegiance allegiance,
                              uint32_t boot) {
  PendingGroup pg;
  pg.leader = w;
  pg.machine = machine;
  pg.leader_allegiance = allegiance;
  pg.boot_ring_idx = boot;
  for (int g = 0; g < built_graphs(); ++g) {
    const char* tag = (g == 0) ? "g1" : "g2";
    pg.links[g].assign(65, LinkState{});
    pg.members[g].reserve(slots_);
    for (uint32_t slot = 0; slot < slots_; ++slot) {
      IdPoint point = membership_point(tag, w, slot);
      std::optional<uint32_t> got = resolve_member(point, boot);
      if (!got.has_value()) {
        pg.unfilled[g]++;
        continue;
      }
      uint32_t ridx = *got;
      uint32_t owner = ring_machine_[ridx];
      if (!alive(owner)) {
        pg.unfilled[g]++;
        continue;
      }
      bool accept =
          ring_allegiance_[ridx] == Allegiance::bad || verify_membership_selfcheck(ridx);
      if (!accept) {
        pg.unfilled[g]++;
        rejects_++;
        continue;
      }
      pg.members[g].push_back({old_base_.ids().at(ridx), ring_allegiance_[ridx], true});
      pg.owners[g].push_back(owner);
      pg.member_ring[g].push_back(ridx);
    }
  }

  size_t gi = groups_.size();
  for (int g = 0; g < built_graphs(); ++g) {
    for (uint32_t owner : pg.owners[g]) holder_groups_[owner].push_back(gi);
  }
  groups_.push_back(std::move(pg));
  index_of_leader_.emplace(w, gi);
  if (!ring_.insert(w).second) throw std::runtime_error("duplicate new-ring id");

  setup_links(gi);
  update_affected_by(w);
  for (uint32_t slot = 0; slot < 64; ++slot) {
    target_index_.emplace(finger_target(w, slot), std::make_pair(gi, slot));
  }
}

bool NewPairBuilder::departure_within_caps(uint32_t machine, double cap_fraction) const {
  auto it = holder_groups_.find(machine);
  if (it == holder_groups_.end()) return true;
  for (size_t gi : it->second) {
    const PendingGroup& pg = groups_[gi];
    for (int g = 0; g < built_graphs(); ++g) {
      size_t live_good = 0;
      bool holds = false;
      for (size_t s = 0; s < pg.members[g].size(); ++s) {
        const auto& m = pg.members[g][s];
        live_good += m.alive && m.allegiance == Allegiance::good;
        holds = holds || (pg.owners[g][s] == machine && m.alive &&
                          m.allegiance == Allegiance::good);
      }
      if (holds && pg.good_departures[g] + 1 >
                       static_cast<uint32_t>(cap_fraction * static_cast<double>(live_good))) {
        return false;
      }
    }
  }
  return true;
}

void NewPairBuilder::apply_departure(uint32_t machine) {
  auto it = holder_groups_.find(machine);
  if (it == holder_groups_.end()) return;
  for (size_t gi : it->second) {
    PendingGroup& pg = groups_[gi];
    for (int g = 0; g < built_graphs(); ++g) {
      for (size_t s = 0; s < pg.owners[g].size(); ++s) {
        if (pg.owners[g][s] == machine && pg.members[g][s].alive) {
          pg.members[g][s].alive = false;
          if (pg.members[g][s].allegiance == Allegiance::good) pg.good_departures[g]++;
        }
      }
    }
  }
}

bool NewPairBuilder::verify_neighbor(IdPoint candidate_leader, IdPoint target_key) {
  auto it = index_of_leader_.find(candidate_leader);
  if (it == index_of_leader_.end()) return false;
  // The group verifies, not the leader: a departed leader leaves its
  // members in place and they still answer link requests.
  PendingGroup& cand = groups_[it->second];
  if (cand.leader_allegiance == Allegiance::bad) return true;
  uint32_t origin = cand.next_origin(*machine_alive_);
  int ok = 0;
  for (int g = 0; g < searched_graphs(); ++g) {
    if (transport_search(g, origin, target_key, nullptr)) ok++;
  }
  if (ok == 0) rejects_++;
  return ok > 0;
}

void NewPairBuilder::attempt_link_update(size_t gi, int g, uint32_t slot, IdPoint truth) {
  PendingGroup& pg = groups_[gi];
  LinkState& ls = pg.links[g][slot];
  if (ls.candidate.has_value() && *ls.candidate == truth) return;
  IdPoint key =
      slot == kPredSlot ? IdPoint{pg.leader.value - 1} : finger_target(pg.leader, slot);
  uint32_t origin = pg.next_origin(*machine_alive_);
  int ok = 0;
  for (int og = 0; og < searched_graphs(); ++og) {
    if (transport_search(og, origin, key, nullptr)) ok++;
  }
  if (ok == 0) return;  // this attempt failed; the stale link survives
  if (!verify_neighbor(truth, key)) return;
  // The located neighbor is the current true resolution, which is
  // never farther from the target than the held candidate, so the
  // update rule (link only to a better match) always admits it.
  ls.candidate = truth;
}

void NewPairBuilder::setup_links(size_t gi) {
  if (ring_.size() < 2) return;
  IdPoint leader = groups_[gi].leader;
  for (int g = 0; g < built_graphs(); ++g) {
    std::optional<IdPoint> prev_truth;
    uint32_t prev_slot = 0;
    for (uint32_t slot = 0; slot < 64; ++slot) {
      std::optional<IdPoint> truth = ring_successor(finger_target(leader, slot));
      if (!truth.has_value() || *truth == leader) {
        prev_truth.reset();
        continue;
      }
      if (prev_truth.has_value() && *truth == *prev_truth) {
        groups_[gi].links[g][slot] = groups_[gi].links[g][prev_slot];
        continue;
      }
      attempt_link_update(gi, g, slot, *truth);
      prev_truth = truth;
      prev_slot = slot;
    }
    std::optional<IdPoint> pred = ring_strict_predecessor(leader);
    if (pred.has_value()) attempt_link_update(gi, g, kPredSlot, *pred);
  }
}

void NewPairBuilder::update_affected_by(IdPoint v) {
  if (ring_.size() < 2) return;
  std::optional<IdPoint> pred = ring_strict_predecessor(v);
  if (!pred.has_value()) return;
  std::map<size_t, std::vector<uint32_t>> affected;
  auto collect = [&](IdPoint lo_excl, IdPoint hi_incl, bool from_begin) {
    auto it = from_begin ? target_index_.begin() : target_index_.upper_bound(lo_excl);
    auto end = target_index_.upper_bound(hi_incl);
    for (; it != end; ++it) affected[it->second.first].push_back(it->second.second);
  };
  if (pred->value < v.value) {
    collect(*pred, v, false);
  } else {
    collect(*pred, IdPoint{~0ULL}, false);
    collect(IdPoint{0}, v, true);
  }
  for (auto& [gi, slots] : affected) {
    if (groups_[gi].leader == v) continue;
    for (int g = 0; g < built_graphs(); ++g) {
      for (uint32_t slot : slots) attempt_link_update(gi, g, slot, v);
    }
  }
  std::optional<IdPoint> succ = ring_successor(IdPoint{v.value + 1});
  if (succ.has_value() && *succ != v) {
    auto it = index_of_leader_.find(*succ);
    if (it != index_of_leader_.end()) {
      for (int g = 0; g < built_graphs(); ++g) {
        attempt_link_update(it->second, g, kPredSlot, v);
      }
    }
  }
}

void NewPairBuilder::refresh_links(size_t gi) {
  if (ring_.size() < 2) return;
  IdPoint leader = groups_[gi].leader;
  for (int g = 0; g < built_graphs(); ++g) {
    std::optional<IdPoint> prev_truth;
    uint32_t prev_slot = 0;
    for (uint32_t slot = 0; slot < 64; ++slot) {
      std::optional<IdPoint> truth = ring_successor(finger_target(leader, slot));
      if (!truth.has_value() || *truth == leader) {
        prev_truth.reset();
        continue;
      }
      if (prev_truth.has_value() && *truth == *prev_truth) {
        groups_[gi].links[g][slot] = groups_[gi].links[g][prev_slot];
        continue;
      }
      attempt_link_update(gi, g, slot, *truth);
      prev_truth = truth;
      prev_slot = slot;
    }
    std::optional<IdPoint> pred = ring_strict_predecessor(leader);
    if (pred.has_value()) attempt_link_update(gi, g, kPredSlot, *pred);
  }
}

void NewPairBuilder::final_sweep() {
  for (size_t pass = 0; pass < params_.link_sweep_passes; ++pass) {
    for (size_t gi = 0; gi < groups_.size(); ++gi) refresh_links(gi);
  }
}

NewPairBuilder::Finalized NewPairBuilder::finalize(const GroupSizePolicy& policy) {
  Finalized out;
  std::vector<IdPoint> final_ids(ring_.begin(), ring_.end());
  RingSet final_ring = RingSet::from_points(final_ids);
  auto base = std::make_shared<const InputGraph>(InputGraph::build(std::move(final_ring)));
  out.base = base;
  const RingSet& ids = base->ids();

  out.ring_machine.assign(ids.size(), 0);
  out.ring_allegiance.assign(ids.size(), Allegiance::good);

  for (int g = 0; g < built_graphs(); ++g) {
    auto graph = std::make_unique<GroupGraph>(GroupGraph::empty_shell(base));
    std::vector<std::vector<uint32_t>> owners(ids.size());
    for (auto& [leader, gi] : index_of_leader_) {
      PendingGroup& pg = groups_[gi];
      uint32_t idx = static_cast<uint32_t>(ids.index_of(leader));
      Group& grp = graph->group_mut(idx);
      grp.leader = leader;
      grp.members = pg.members[g];
      owners[idx] = pg.owners[g];
      out.ring_machine[idx] = pg.machine;
      out.ring_allegiance[idx] = pg.leader_allegiance;

      // Derived links vs the rule-derived adjacency.
      std::set<IdPoint> derived;
      for (uint32_t slot = 0; slot < 65; ++slot) {
        const auto& cand = pg.links[g][slot].candidate;
        if (cand.has_value() && *cand != leader) {
          // Only slots whose target still resolves somewhere count; a
          // self-resolving finger has no link under the rule.
          if (slot == kPredSlot ||
              ring_successor(finger_target(leader, slot)) != leader) {
            derived.insert(*cand);
          }
        }
      }
      std::set<IdPoint> truth;
      for (uint32_t nb : base->neighbors_of(idx)) truth.insert(ids.at(nb));
      grp.confused = derived != truth;
      out.confused[g] += grp.confused;
      bool comp_bad = !policy.composition_good(grp) || !policy.size_good(grp) ||
                      !grp.has_live_good_majority();
      out.bad_composition[g] += comp_bad;
      if ((grp.confused || comp_bad) && getenv("TG_DEBUG_RED") != nullptr) {
        fprintf(stderr,
                "red g=%d leader=%s confused=%d comp=%d size=%d maj=%d members=%zu bad=%zu "
                "derived=%zu truth=%zu\n",
                g, leader.to_hex().c_str(), (int)grp.confused,
                (int)!policy.composition_good(grp), (int)!policy.size_good(grp),
                (int)!grp.has_live_good_majority(), grp.members.size(), grp.bad_count(),
                derived.size(), truth.size());
      }

      out.machine_slots[pg.machine] += 0;  // ensure a row exists for every leader machine
      for (uint32_t owner : pg.owners[g]) out.machine_slots[owner]++;
      out.machine_links[pg.machine] += derived.size();
    }
    graph->mark_colors_organic(policy);
    out.graphs.push_back(std::move(graph));
    out.slot_owners.push_back(std::move(owners));
  }

  // Reverse links: who lists my group as a neighbor.
  for (int g = 0; g < built_graphs(); ++g) {
    for (auto& [leader, gi] : index_of_leader_) {
      const PendingGroup& pg = groups_[gi];
      std::set<IdPoint> derived;
      for (uint32_t slot = 0; slot < 65; ++slot) {
        const auto& cand = pg.links[g][slot].candidate;
        if (cand.has_value() && *cand != leader) derived.insert(*cand);
      }
      for (IdPoint nb : derived) {
        auto it = index_of_leader_.find(nb);
        if (it != index_of_leader_.end()) {
          out.machine_links[groups_[it->second].machine]++;
        }
      }
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

EpochSimulation::EpochSimulation(EpochParams params, uint64_t seed)
    : params_(params), seed_(seed) {
  if (!(params_.beta < 0.5) || !((1.0 + params_.delta) * params_.beta < 0.5)) {
    throw std::invalid_argument("good-majority feasibility violated");
  }
  if (!(params_.d1 < params_.d2)) throw std::invalid_argument("d1 must be below d2");
  double lnln = std::log(std::log(static_cast<double>(params_.n)));
  if (params_.d1 * lnln < 3.0) {
    throw std::invalid_argument("n too small: d1 ln ln n below 3");
  }
  machines_.resize(params_.n);
  size_t bad = static_cast<size_t>(params_.beta * static_cast<double>(params_.n));
  Rng shuffle = Rng::derive(seed_, "allegiance");
  std::vector<uint32_t> order(params_.n);
  for (uint32_t i = 0; i < params_.n; ++i) order[i] = i;
  for (size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[shuffle.index(i)]);
  }
  for (size_t i = 0; i < bad; ++i) machines_[order[i]].allegiance = Allegiance::bad;
  build_initial_pair();
}

void EpochSimulation::build_initial_pair() {
  // Epoch-0 ids, one per machine; the simulator builds the starting
  // pair directly with oracle successors and correct links.
  Rng idrng = Rng::derive(seed_, "epoch-ids", 0);
  std::map<IdPoint, uint32_t> by_point;
  for (uint32_t m = 0; m < machines_.size(); ++m) {
    for (;;) {
      IdPoint p{idrng.next()};
      if (by_point.emplace(p, m).second) break;
    }
  }
  std::vector<IdPoint> pts;
  pts.reserve(by_point.size());
  ring_machine_.clear();
  for (auto& [p, m] : by_point) {
    pts.push_back(p);
    ring_machine_.push_back(m);
  }
  rings_by_epoch_.assign(1, pts);
  old_base_ = std::make_shared<const InputGraph>(InputGraph::build(RingSet::from_points(pts)));

  lnln_estimate_ = estimate_loglog_n(ring_gaps(old_base_->ids()));
  slots_per_group_ = static_cast<size_t>(std::ceil(params_.d2 * lnln_estimate_));
  policy_.min_size = static_cast<size_t>(std::ceil(params_.d1 * lnln_estimate_));
  policy_.max_size = slots_per_group_;
  policy_.bad_fraction_cap = (1.0 + params_.delta) * params_.beta;

  std::vector<Allegiance> ring_allegiance(ring_machine_.size());
  for (size_t i = 0; i < ring_machine_.size(); ++i) {
    ring_allegiance[i] = machines_[ring_machine_[i]].allegiance;
  }

  for (int g = 0; g < graph_count(); ++g) {
    const char* tag = (g == 0) ? "g1" : "g2";
    old_[g].graph = std::make_unique<GroupGraph>(
        GroupGraph::build_direct(old_base_, tag, slots_per_group_, ring_allegiance));
    old_[g].slot_owner.assign(old_base_->size(), {});
    for (uint32_t i = 0; i < old_base_->size(); ++i) {
      auto& grp = old_[g].graph->group_mut(i);
      old_[g].slot_owner[i].reserve(grp.members.size());
      for (const auto& mem : grp.members) {
        old_[g].slot_owner[i].push_back(ring_machine_[old_base_->ids().index_of(mem.id)]);
      }
    }
    old_[g].graph->mark_colors_organic(policy_);
    if (params_.all_blue_initial) old_[g].graph->mark_all_blue();
    if (params_.initial_red_fraction > 0.0) {
      Rng marks = Rng::derive(seed_, "initial-marks", static_cast<uint64_t>(g));
      for (uint32_t i = 0; i < old_[g].graph->size(); ++i) {
        if (marks.bernoulli(params_.initial_red_fraction)) {
          old_[g].graph->set_color(i, Color::red);
        }
      }
    }
  }

  member_refs_.assign(machines_.size(), {});
  for (int g = 0; g < graph_count(); ++g) {
    for (uint32_t i = 0; i < old_base_->size(); ++i) {
      const auto& owners = old_[g].slot_owner[i];
      for (uint32_t s = 0; s < owners.size(); ++s) {
        member_refs_[owners[s]].push_back({static_cast<uint8_t>(g), i, s});
      }
    }
  }
}

const GroupGraph& EpochSimulation::old_graph(int which) const {
  if (which < 1 || which > graph_count()) throw std::invalid_argument("no such graph");
  return *old_[which - 1].graph;
}

void EpochSimulation::plant_old_color(int which, uint32_t group_idx, Color c) {
  if (which < 1 || which > graph_count()) throw std::invalid_argument("no such graph");
  old_[which - 1].graph->set_color(group_idx, c);
}

const std::vector<IdPoint>& EpochSimulation::ring_created_at(uint64_t epoch) const {
  return rings_by_epoch_.at(epoch);
}

size_t EpochSimulation::alive_machine_count() const {
  size_t c = 0;
  for (const auto& m : machines_) c += m.alive;
  return c;
}

double EpochSimulation::mean_membership_slots_per_graph() const {
  if (census_.empty()) return 0.0;
  double total = 0.0;
  size_t holders = 0;
  for (const auto& row : census_) {
    total += static_cast<double>(row.membership_slots);
    holders++;
  }
  return total / static_cast<double>(holders) / static_cast<double>(graph_count());
}

uint32_t EpochSimulation::pick_bootstrap(Rng& rng) const {
  // A joiner is assumed to know a good bootstrapping group: sample
  // leaders until one is blue (in every serving graph) and alive.
  for (int tries = 0; tries < 4096; ++tries) {
    uint32_t idx = static_cast<uint32_t>(rng.index(old_base_->size()));
    bool ok = machines_[ring_machine_[idx]].alive;
    for (int g = 0; g < graph_count(); ++g) {
      ok = ok && old_[g].graph->is_blue(idx) && old_[g].graph->group(idx).live_count() > 0;
    }
    if (ok) return idx;
  }
  // Saturated serving pair: no good bootstrap exists. Joins still
  // enter the ring; their searches fail at the red origin.
  for (uint32_t idx = 0; idx < old_base_->size(); ++idx) {
    if (machines_[ring_machine_[idx]].alive) return idx;
  }
  return 0;
}

void EpochSimulation::depart_machine(uint32_t machine) {
  machines_[machine].alive = false;
  for (const SlotRef& ref : member_refs_[machine]) {
    auto& grp = old_[ref.graph].graph->group_mut(ref.group);
    if (grp.members[ref.slot].alive) {
      grp.members[ref.slot].alive = false;
      if (grp.members[ref.slot].allegiance == Allegiance::good) {
        old_dep_counts_[ref.graph][ref.group]++;
      }
    }
    if (grp.live_count() == 0) old_[ref.graph].graph->set_color(ref.group, Color::red);
  }
}

void EpochSimulation::run() {
  for (size_t e = 0; e < params_.epochs; ++e) run_one_epoch();
}

void EpochSimulation::run_one_epoch() {
  const uint64_t T = params_.steps();
  const uint64_t half = T / 2;
  epoch_++;

  // Ledger snapshot for per-epoch message totals.
  uint64_t msg_inter0 = 0, msg_internal0 = 0;
  for (int g = 0; g < graph_count(); ++g) {
    msg_inter0 += old_[g].graph->ledger().inter_group;
    msg_internal0 += old_[g].graph->ledger().group_internal;
  }

  // Per-epoch estimator from the serving ring.
  lnln_estimate_ = estimate_loglog_n(ring_gaps(old_base_->ids()));
  slots_per_group_ = static_cast<size_t>(std::ceil(params_.d2 * lnln_estimate_));
  policy_.min_size = static_cast<size_t>(std::ceil(params_.d1 * lnln_estimate_));
  policy_.max_size = slots_per_group_;
  policy_.bad_fraction_cap = (1.0 + params_.delta) * params_.beta;

  std::vector<Allegiance> ring_allegiance(ring_machine_.size());
  for (size_t i = 0; i < ring_machine_.size(); ++i) {
    ring_allegiance[i] = machines_[ring_machine_[i]].allegiance;
  }

  old_dep_counts_[0].assign(old_base_->size(), 0);
  old_dep_counts_[1].assign(old_base_->size(), 0);

  machine_alive_.assign(machines_.size(), 0);
  for (size_t m = 0; m < machines_.size(); ++m) machine_alive_[m] = machines_[m].alive;

  NewPairBuilder builder(params_, *old_base_, old_[0].graph.get(),
                         graph_count() == 2 ? old_[1].graph.get() : nullptr, ring_machine_,
                         ring_allegiance, &machine_alive_, seed_, slots_per_group_);

  // Events: all alive machines join in the second half; churn swaps
  // good machines for fresh arrivals throughout the epoch.
  struct Event {
    uint64_t step;
    int kind;  // 0 = departure+arrival, 1 = join
    uint32_t machine;
  };
  std::vector<Event> events;
  Rng joins = Rng::derive(seed_, "join-steps", epoch_);
  for (uint32_t m = 0; m < machines_.size(); ++m) {
    if (!machines_[m].alive) continue;
    events.push_back({half + joins.below(T - half), 1, m});
  }
  Rng churn = Rng::derive(seed_, "churn", epoch_);
  size_t swaps = static_cast<size_t>(params_.churn_fraction * static_cast<double>(params_.n));
  for (size_t s = 0; s < swaps; ++s) {
    events.push_back({churn.below(T), 0, 0});
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const Event& a, const Event& b) { return a.step < b.step; });

  const double cap_fraction = (1.0 - 2.0 * (1.0 + params_.delta) * params_.beta) / 2.0;
  Rng victims = Rng::derive(seed_, "victims", epoch_);
  Rng boots = Rng::derive(seed_, "boots", epoch_);
  Rng idrng = Rng::derive(seed_, "epoch-ids", epoch_);
  std::set<uint64_t> used_ids;
  for (IdPoint p : rings_by_epoch_.back()) used_ids.insert(p.value);
  auto fresh_id = [&]() {
    for (;;) {
      IdPoint p{idrng.next()};
      if (used_ids.insert(p.value).second) return p;
    }
  };

  // Pre-draw next-epoch ids for the machines alive at epoch start.
  std::map<uint32_t, IdPoint> next_id;
  for (uint32_t m = 0; m < machines_.size(); ++m) {
    if (machines_[m].alive) next_id[m] = fresh_id();
  }

  size_t joined = 0;
  for (size_t ei = 0; ei < events.size(); ++ei) {
    Event ev = events[ei];
    if (ev.kind == 1) {
      uint32_t m = ev.machine;
      if (!machines_[m].alive) continue;  // departed before its join step
      uint32_t boot = pick_bootstrap(boots);
      builder.add_join(next_id.at(m), m, machines_[m].allegiance, boot);
      joined++;
      continue;
    }
    // Departure paired with an arrival. Victims are good machines,
    // capped so no group loses more than the allowed fraction of its
    // good members in one epoch.
    std::optional<uint32_t> victim;
    for (int tries = 0; tries < 64; ++tries) {
      uint32_t m = static_cast<uint32_t>(victims.index(machines_.size()));
      if (!machines_[m].alive || machines_[m].allegiance == Allegiance::bad) continue;
      bool ok = builder.departure_within_caps(m, cap_fraction);
      for (const SlotRef& ref : member_refs_[m]) {
        if (!ok) break;
        const auto& grp = old_[ref.graph].graph->group(ref.group);
        if (!grp.members[ref.slot].alive ||
            grp.members[ref.slot].allegiance != Allegiance::good) {
          continue;
        }
        ok = old_dep_counts_[ref.graph][ref.group] + 1 <=
             static_cast<uint32_t>(cap_fraction *
                                   static_cast<double>(grp.live_good_count()));
      }
      if (ok) {
        victim = m;
        break;
      }
    }
    if (!victim.has_value()) continue;  // no cap-respecting victim; skip the event
    depart_machine(*victim);
    machine_alive_[*victim] = 0;
    builder.apply_departure(*victim);
    next_id.erase(*victim);

    uint32_t arrival = static_cast<uint32_t>(machines_.size());
    machines_.push_back({Allegiance::good, true});
    member_refs_.push_back({});
    machine_alive_.push_back(1);
    if (ev.step < T - 1) {
      uint64_t join_step = std::max(ev.step + 1, half);
      if (join_step < T) {
        next_id[arrival] = fresh_id();
        // Insert the arrival's join into the remaining event stream.
        Event join_ev{join_step, 1, arrival};
        auto pos = std::upper_bound(
            events.begin() + static_cast<long>(ei) + 1, events.end(), join_ev,
            [](const Event& a, const Event& b) { return a.step < b.step; });
        events.insert(pos, join_ev);
      }
    }
  }

  builder.final_sweep();

  // Spam verification load, measured on a machine subsample. Every
  // request names a point the victim does not own, so its dual
  // verification search either resolves elsewhere or fails; both ways
  // the request is rejected.
  size_t spam_seen = 0, spam_accepted = 0;
  if (params_.adversary.requests != RequestBehavior::none) {
    std::vector<IdPoint> bad_leaders;
    for (uint32_t i = 0; i < old_base_->size(); ++i) {
      if (ring_allegiance[i] == Allegiance::bad) bad_leaders.push_back(old_base_->ids().at(i));
    }
    size_t sample = std::min<size_t>(old_base_->size(), 64);
    for (size_t k = 0; k < sample; ++k) {
      uint32_t victim = static_cast<uint32_t>(
          hash64_words("spam-victim", {seed_, epoch_, k}) % old_base_->size());
      if (ring_allegiance[victim] == Allegiance::bad) continue;
      auto reqs = spam_requests(params_.adversary, seed_, bad_leaders,
                                old_base_->ids().at(victim), slots_per_group_);
      bool owner_is_victim_possible = false;
      for (const auto& req : reqs) {
        spam_seen++;
        bool accepted = false;
        for (int g = 0; g < graph_count(); ++g) {
          GroupGraph& graph = *old_[g].graph;
          std::vector<uint32_t> path;
          old_base_->route_into(victim, req.hash_point, path);
          bool ok = true;
          for (uint32_t idx : path) {
            if (!graph.is_blue(idx) || graph.group(idx).live_count() == 0) {
              ok = false;
              break;
            }
          }
          // "Accept iff a search returns the victim." A verified accept
          // of a point the victim genuinely owns is a correct P3
          // relationship, not an erroneous one.
          if (ok && path.back() == victim) accepted = true;
        }
        bool owns = old_base_->ids().successor_index(req.hash_point) == victim;
        owner_is_victim_possible = owner_is_victim_possible || owns;
        spam_accepted += accepted && !owns;
      }
      (void)owner_is_victim_possible;
    }
  }

  auto fin = builder.finalize(policy_);

  EpochMetricsRow row;
  row.epoch = epoch_;
  row.ring_size = fin.base->size();
  row.red_fraction_g1 = fin.graphs[0]->red_fraction();
  row.red_fraction_g2 = graph_count() == 2 ? fin.graphs[1]->red_fraction()
                                           : std::numeric_limits<double>::quiet_NaN();
  double confused = 0, badcomp = 0;
  for (int g = 0; g < graph_count(); ++g) {
    confused += static_cast<double>(fin.confused[g]);
    badcomp += static_cast<double>(fin.bad_composition[g]);
  }
  row.confused_fraction =
      confused / static_cast<double>(graph_count() * fin.base->size());
  row.bad_composition_fraction =
      badcomp / static_cast<double>(graph_count() * fin.base->size());
  uint64_t accepted = 0, unfilled = 0;
  for (int g = 0; g < graph_count(); ++g) {
    accepted += builder.accepted_slots(g);
    unfilled += builder.unfilled_slots(g);
  }
  row.mean_memberships = joined == 0 ? 0.0
                                     : static_cast<double>(accepted) /
                                           static_cast<double>(graph_count()) /
                                           static_cast<double>(old_base_->size());
  row.unfilled_slot_fraction =
      accepted + unfilled == 0
          ? 0.0
          : static_cast<double>(unfilled) / static_cast<double>(accepted + unfilled);
  row.construction_fail_rate =
      builder.searches() == 0
          ? 0.0
          : static_cast<double>(builder.failures()) / static_cast<double>(builder.searches());
  row.spam_requests_seen = spam_seen;
  row.spam_requests_accepted = spam_accepted;

  census_.clear();
  {
    std::map<uint32_t, size_t> links = fin.machine_links;
    std::map<uint32_t, size_t> slots = fin.machine_slots;
    for (auto& [machine, cnt] : slots) {
      if (machines_[machine].allegiance != Allegiance::good) continue;
      CensusRow crow;
      crow.machine = machine;
      crow.membership_slots = cnt;
      auto it = links.find(machine);
      crow.linked_groups = it == links.end() ? 0 : it->second;
      crow.erroneous_accepts = 0;  // structurally rejected; kept for the census contract
      census_.push_back(crow);
    }
  }
  double mean_links = 0;
  for (const auto& c : census_) mean_links += static_cast<double>(c.linked_groups);
  row.mean_linked_groups =
      census_.empty() ? 0.0 : mean_links / static_cast<double>(census_.size());
  row.erroneous_accepts_mean = 0.0;

  uint64_t msg_inter1 = 0, msg_internal1 = 0;
  for (int g = 0; g < graph_count(); ++g) {
    msg_inter1 += old_[g].graph->ledger().inter_group;
    msg_internal1 += old_[g].graph->ledger().group_internal;
  }
  row.msg_inter_group = msg_inter1 - msg_inter0;
  row.msg_group_internal = msg_internal1 - msg_internal0;
  metrics_.push_back(row);

  // Rollover: the built pair starts serving, the previous pair
  // retires, and its member ids age out of the system.
  rings_by_epoch_.push_back(std::vector<IdPoint>());
  {
    std::vector<IdPoint>& created = rings_by_epoch_.back();
    for (size_t i = 0; i < fin.base->size(); ++i) created.push_back(fin.base->ids().at(i));
  }
  old_base_ = fin.base;
  ring_machine_ = std::move(fin.ring_machine);
  for (int g = 0; g < graph_count(); ++g) {
    old_[g].graph = std::move(fin.graphs[static_cast<size_t>(g)]);
    old_[g].slot_owner = std::move(fin.slot_owners[static_cast<size_t>(g)]);
  }
  member_refs_.assign(machines_.size(), {});
  for (int g = 0; g < graph_count(); ++g) {
    for (uint32_t i = 0; i < old_base_->size(); ++i) {
      const auto& owners = old_[g].slot_owner[i];
      for (uint32_t s = 0; s < owners.size(); ++s) {
        member_refs_[owners[s]].push_back({static_cast<uint8_t>(g), i, s});
      }
    }
  }
}

}  // namespace tinygroups
