#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tinygroups/idring.hpp"
#include "tinygroups/rng.hpp"

namespace tinygroups {

enum class IdSubsetRule : uint8_t { all, random_half, contiguous_arc, lowest_fraction };
enum class SearchBehavior : uint8_t { drop, misroute_to_red };
enum class RequestBehavior : uint8_t { none, spam_memberships, spam_neighbors };
enum class GossipBehavior : uint8_t { none, delay_release };
enum class PowBehavior : uint8_t { honest_rate, bias_small_outputs, precompute_hoard };

/**
 * One colluding adversary. Strategies are deterministic functions of
 * the adversary seed and the observable state; they never see a good
 * id's local randomness (no Rng for good streams is ever passed in).
 */
struct AdversaryStrategy {
  IdSubsetRule id_subset = IdSubsetRule::all;
  SearchBehavior search = SearchBehavior::drop;
  RequestBehavior requests = RequestBehavior::none;
  GossipBehavior gossip = GossipBehavior::none;
  PowBehavior pow = PowBehavior::honest_rate;
  double spam_factor = 0.0;       // spam volume as a multiple of organic request load
  uint64_t gossip_delay_step = 0; // 0 = release at the last possible step

  static AdversaryStrategy none() { return {}; }
  static AdversaryStrategy worst() {
    AdversaryStrategy s;
    s.id_subset = IdSubsetRule::all;
    s.search = SearchBehavior::misroute_to_red;
    s.requests = RequestBehavior::spam_memberships;
    s.gossip = GossipBehavior::delay_release;
    s.pow = PowBehavior::bias_small_outputs;
    s.spam_factor = 10.0;
    return s;
  }
};

AdversaryStrategy parse_strategy(std::string_view name);

// The subset of its own ids the adversary chooses to field. Used to
// probe that the input-graph properties survive arbitrary omission.
std::vector<IdPoint> select_id_subset(std::span<const IdPoint> bad_ids, IdSubsetRule rule,
                                      Rng& adv_rng);

/**
 * Behavior of a search that has reached a red group. The measured
 * search outcome is already fixed (the path halts there); this hook
 * only decides what the adversary does with the stranded request:
 * silently drop it or shuttle it among red groups, which burns
 * messages but can never mint a verified result.
 */
struct RedGroupAction {
  bool dropped = true;
  uint32_t extra_red_hops = 0;  // message-ledger cost of misrouting
};
RedGroupAction act_on_search(const AdversaryStrategy& s, uint64_t adv_seed,
                             uint64_t search_nonce, size_t red_group_count);

// A spam membership/neighbor request naming a bad group's leader. The
// hash point is the real, recomputable point for (claimed_group, slot);
// fabricated points would fail recomputation before any search runs.
struct SpamRequest {
  IdPoint claimed_group;  // bad leader the victim is asked to join/link
  uint32_t slot = 0;
  IdPoint hash_point;     // membership point of (claimed_group, slot)
  bool neighbor_request = false;
};
std::vector<SpamRequest> spam_requests(const AdversaryStrategy& s, uint64_t adv_seed,
                                       std::span<const IdPoint> bad_leaders,
                                       IdPoint victim, size_t organic_request_load);

}  // namespace tinygroups
