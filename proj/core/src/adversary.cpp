#include "tinygroups/adversary.hpp"

#include <algorithm>
#include <stdexcept>

#include "tinygroups/group_graph.hpp"
#include "tinygroups/hashing.hpp"

namespace tinygroups {

AdversaryStrategy parse_strategy(std::string_view name) {
  if (name == "none") return AdversaryStrategy::none();
  if (name == "worst") return AdversaryStrategy::worst();
  if (name == "drop_only") {
    AdversaryStrategy s;
    s.search = SearchBehavior::drop;
    return s;
  }
  if (name == "misroute_only") {
    AdversaryStrategy s;
    s.search = SearchBehavior::misroute_to_red;
    return s;
  }
  if (name == "spam_only") {
    AdversaryStrategy s;
    s.requests = RequestBehavior::spam_memberships;
    s.spam_factor = 10.0;
    return s;
  }
  if (name == "delay_only") {
    AdversaryStrategy s;
    s.gossip = GossipBehavior::delay_release;
    return s;
  }
  if (name == "bias_only") {
    AdversaryStrategy s;
    s.pow = PowBehavior::bias_small_outputs;
    return s;
  }
  throw std::invalid_argument("unknown adversary strategy: " + std::string(name));
}

std::vector<IdPoint> select_id_subset(std::span<const IdPoint> bad_ids, IdSubsetRule rule,
                                      Rng& adv_rng) {
  std::vector<IdPoint> out(bad_ids.begin(), bad_ids.end());
  std::sort(out.begin(), out.end());
  switch (rule) {
    case IdSubsetRule::all:
      return out;
    case IdSubsetRule::random_half: {
      std::vector<IdPoint> keep;
      for (IdPoint p : out) {
        if (adv_rng.bernoulli(0.5)) keep.push_back(p);
      }
      return keep;
    }
    case IdSubsetRule::contiguous_arc: {
      // Keep only ids in [0, 1/2).
      std::vector<IdPoint> keep;
      for (IdPoint p : out) {
        if (p.value < (1ULL << 63)) keep.push_back(p);
      }
      return keep;
    }
    case IdSubsetRule::lowest_fraction: {
      out.resize(out.size() / 2);
      return out;
    }
  }
  return out;
}

RedGroupAction act_on_search(const AdversaryStrategy& s, uint64_t adv_seed,
                             uint64_t search_nonce, size_t red_group_count) {
  RedGroupAction act;
  if (s.search == SearchBehavior::misroute_to_red && red_group_count > 1) {
    act.dropped = true;  // the request still never resolves
    act.extra_red_hops = 1 + static_cast<uint32_t>(
        hash64_words("adv-misroute", {adv_seed, search_nonce}) % 3);
  }
  return act;
}

std::vector<SpamRequest> spam_requests(const AdversaryStrategy& s, uint64_t adv_seed,
                                       std::span<const IdPoint> bad_leaders,
                                       IdPoint victim, size_t organic_request_load) {
  std::vector<SpamRequest> out;
  if (s.requests == RequestBehavior::none || bad_leaders.empty()) return out;
  size_t volume = static_cast<size_t>(s.spam_factor * static_cast<double>(organic_request_load));
  out.reserve(volume);
  for (size_t i = 0; i < volume; ++i) {
    SpamRequest req;
    uint64_t h = hash64_words("adv-spam", {adv_seed, victim.value, i});
    req.claimed_group = bad_leaders[h % bad_leaders.size()];
    req.slot = static_cast<uint32_t>(h >> 32) % static_cast<uint32_t>(organic_request_load);
    req.hash_point = membership_point("g1", req.claimed_group, req.slot);
    req.neighbor_request = s.requests == RequestBehavior::spam_neighbors;
    out.push_back(req);
  }
  return out;
}

}  // namespace tinygroups
