#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "tinygroups/adversary.hpp"
#include "tinygroups/idring.hpp"
#include "tinygroups/input_graph.hpp"
#include "tinygroups/rng.hpp"

namespace tinygroups {

enum class Allegiance : uint8_t { good, bad };
enum class Color : uint8_t { blue, red };

struct GroupMember {
  IdPoint id;
  Allegiance allegiance = Allegiance::good;
  bool alive = true;
};

/**
 * One group: a leader id plus member slots. Member entries keep slot
 * semantics (the same id solicited through two hash points occupies
 * two slots), which is also what the binomial size/badness oracles
 * assume.
 */
struct Group {
  IdPoint leader;
  std::vector<GroupMember> members;
  bool confused = false;  // neighbor links differ from the linking rule

  size_t bad_count() const;
  size_t live_count() const;
  size_t live_good_count() const;
  bool has_live_good_majority() const;
};

struct GroupSizePolicy {
  size_t min_size = 0;         // ceil(d1 ln ln n)
  size_t max_size = 0;         // ceil(d2 ln ln n)
  double bad_fraction_cap = 0; // (1+delta) * beta
  bool composition_good(const Group& g) const;
  bool size_good(const Group& g) const;
  bool group_good(const Group& g) const;
};

struct MessageLedger {
  uint64_t group_internal = 0;
  uint64_t inter_group = 0;
  uint64_t gossip = 0;
};

struct SearchOutcome {
  bool success = false;
  std::vector<uint32_t> path;           // group indices; ends at the blocker on failure
  std::optional<uint32_t> blocking;     // first red group, present iff !success
};

struct SearchTrialStats {
  size_t counted = 0;       // trials with a blue origin
  size_t skipped = 0;       // trials whose sampled origin was red
  size_t failed = 0;
  std::vector<uint64_t> traversals;  // per group, over counted trials
  uint64_t total_cost = 0;           // secure-routing message cost
  uint64_t total_path_groups = 0;    // summed search-path lengths
  double x_hat() const;
  double x_hat_unconditional() const;  // red-origin trials counted as failures
  double mean_path_groups() const;
};

/**
 * The group overlay: one group per input-graph id (same leader id),
 * neighbor sets mirroring the input-graph adjacency for blue groups,
 * and searches that replay the input-graph route but halt at the
 * first red group.
 */
class GroupGraph {
 public:
  // Builds every group directly from the successor oracle: member
  // slots are the successors of the per-leader hash points. This is
  // how initial graphs and the static experiments get their groups.
  static GroupGraph build_direct(std::shared_ptr<const InputGraph> base,
                                 std::string_view hash_tag, size_t slots_per_group,
                                 std::span<const Allegiance> id_allegiance);

  // An empty shell sharing the base topology; the epoch machinery
  // fills groups in as ids join.
  static GroupGraph empty_shell(std::shared_ptr<const InputGraph> base);

  const InputGraph& base() const { return *base_; }
  size_t size() const { return groups_.size(); }
  const Group& group(uint32_t idx) const { return groups_[idx]; }
  Group& group_mut(uint32_t idx) { return groups_[idx]; }
  Color color(uint32_t idx) const { return colors_[idx]; }
  bool is_blue(uint32_t idx) const { return colors_[idx] == Color::blue; }
  const std::vector<Color>& colors() const { return colors_; }

  // Synthetic coloring: each group goes red independently with
  // probability p_f. Throws when p_f is outside [0,1].
  void mark_colors_synthetic(double p_f, Rng& rng);
  // Organic coloring from group state under the given policy: red iff
  // the group is bad (size/composition/lost majority) or confused.
  void mark_colors_organic(const GroupSizePolicy& policy);
  void mark_all_blue();
  void set_color(uint32_t idx, Color c) { colors_[idx] = c; }

  size_t red_count() const;
  double red_fraction() const;
  std::vector<uint32_t> blue_indices() const;

  // Extra edges the adversary wires among red groups. They are kept
  // off the routing tables on purpose; tests assert they cannot
  // change any outcome.
  void add_adversary_edge(uint32_t red_a, uint32_t red_b);
  size_t adversary_edge_count() const { return adversary_edges_.size(); }

  // Search halting at the first red group (which, on failure, is the
  // last path entry). Origin group must exist and be blue.
  SearchOutcome search_path(IdPoint origin_leader, IdPoint key) const;
  SearchOutcome search_path_idx(uint32_t origin_idx, IdPoint key) const;

  // Monte Carlo over uniform blue origins and uniform keys. Trials
  // whose sampled origin is red are skipped, not resampled, so a
  // recoloring outside the measured paths cannot shift the stream.
  SearchTrialStats run_search_trials(size_t trials, Rng& rng) const;

  double estimate_responsibility(IdPoint target_leader, size_t trials, Rng& rng) const;
  double measure_failure_x(size_t trials, Rng& rng) const;

  uint64_t secure_route_cost(const SearchOutcome& outcome) const;

  MessageLedger& ledger() const { return ledger_; }

 private:
  GroupGraph(std::shared_ptr<const InputGraph> base, std::vector<Group> groups)
      : base_(std::move(base)),
        groups_(std::move(groups)),
        colors_(groups_.size(), Color::blue) {}

  std::shared_ptr<const InputGraph> base_;
  std::vector<Group> groups_;
  std::vector<Color> colors_;
  std::vector<std::pair<uint32_t, uint32_t>> adversary_edges_;
  mutable MessageLedger ledger_;
};

// The payload reported by a strict majority of senders; throws
// "filter inconclusive" when no strict majority exists.
uint64_t majority_filter(std::span<const std::pair<IdPoint, uint64_t>> received);

// Membership hash point for slot i of the group led by w, domain
// separated per graph ("g1"/"g2").
IdPoint membership_point(std::string_view graph_tag, IdPoint w, uint32_t slot);

}  // namespace tinygroups
