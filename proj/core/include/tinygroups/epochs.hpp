#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tinygroups/adversary.hpp"
#include "tinygroups/group_graph.hpp"
#include "tinygroups/idring.hpp"
#include "tinygroups/input_graph.hpp"
#include "tinygroups/pow.hpp"
#include "tinygroups/rng.hpp"

namespace tinygroups {

struct EpochParams {
  size_t n = 1024;
  double beta = 0.05;
  double delta = 1.5;    // bad-fraction slack in the goodness test
  double delta2 = 0.0;   // load-imbalance slack used by oracles
  double d1 = 8.0;
  double d2 = 24.0;
  uint64_t T = 0;        // 0 picks 4n
  size_t epochs = 3;
  double churn_fraction = 0.1;
  double initial_red_fraction = 0.0;  // synthetic marks on the starting pair
  bool all_blue_initial = false;      // force the starting pair blue
  bool single_graph_mode = false;     // ablation: one old graph, one new graph
  size_t link_sweep_passes = 6;
  double bootstrap_log_factor = 1.0;  // c_b in ceil(c_b log n / log log n)
  AdversaryStrategy adversary;

  uint64_t steps() const { return T == 0 ? 4 * static_cast<uint64_t>(n) : T; }
};

struct EpochMetricsRow {
  uint64_t epoch = 0;
  size_t ring_size = 0;
  double red_fraction_g1 = 0.0;
  double red_fraction_g2 = 0.0;  // NaN in single-graph mode
  double confused_fraction = 0.0;
  double bad_composition_fraction = 0.0;
  double mean_memberships = 0.0;      // member slots held per active id per graph
  double mean_linked_groups = 0.0;    // own links plus groups linking back
  double erroneous_accepts_mean = 0.0;
  double unfilled_slot_fraction = 0.0;
  double construction_fail_rate = 0.0;  // per-search failure q during construction
  uint64_t msg_inter_group = 0;
  uint64_t msg_group_internal = 0;
  size_t spam_requests_seen = 0;
  size_t spam_requests_accepted = 0;
};

struct BootstrapSample {
  std::vector<uint32_t> groups;    // sampled group indices
  std::vector<IdPoint> members;    // distinct union of their live member ids
  size_t good_count = 0;
  size_t bad_count = 0;
  bool good_majority() const { return 2 * good_count > good_count + bad_count; }
};

// Appendix-style composite bootstrap: ceil(c_b log n / log log n)
// groups sampled uniformly; throws when the graph has fewer groups.
BootstrapSample sample_bootstrap(const GroupGraph& q, double c_b, Rng& rng);

/**
 * The churn simulator. Each epoch: every surviving machine mints a
 * fresh id for the next epoch and joins the new graph pair through
 * bootstrap searches in the old pair; scheduled departures remove
 * good machines (capped per group) and arrivals replace them; link
 * updates fire per join and a reconciliation sweep closes the epoch;
 * then the pair rolls over and ids advance through
 * active -> passive -> expired.
 */
class EpochSimulation {
 public:
  EpochSimulation(EpochParams params, uint64_t seed);

  void run();            // all configured epochs
  void run_one_epoch();  // single epoch including rollover

  const std::vector<EpochMetricsRow>& metrics() const { return metrics_; }

  size_t current_epoch() const { return epoch_; }
  const GroupGraph& old_graph(int which) const;  // which in {1,2}
  const InputGraph& old_base() const { return *old_base_; }
  size_t machine_count() const { return machines_.size(); }
  size_t alive_machine_count() const;

  // Test hook: recolor a group of the serving pair before an epoch runs.
  void plant_old_color(int which, uint32_t group_idx, Color c);

  // Lifecycle bookkeeping: ids by creation epoch, used to assert that
  // nothing expired ever appears in a newly built graph.
  const std::vector<IdPoint>& ring_created_at(uint64_t epoch) const;

  struct CensusRow {
    uint64_t machine = 0;
    size_t membership_slots = 0;  // across the freshly built pair
    size_t linked_groups = 0;
    size_t erroneous_accepts = 0;
  };
  const std::vector<CensusRow>& census() const { return census_; }
  double mean_membership_slots_per_graph() const;

  double lnln_estimate() const { return lnln_estimate_; }
  size_t slots_per_group() const { return slots_per_group_; }

 private:
  struct Machine {
    Allegiance allegiance = Allegiance::good;
    bool alive = true;
  };

  // One graph of the serving (old) pair plus owner bookkeeping.
  struct ServingGraph {
    std::unique_ptr<GroupGraph> graph;
    std::vector<std::vector<uint32_t>> slot_owner;  // [group][slot] -> machine
  };

  void build_initial_pair();
  void seed_epoch_ids();
  uint32_t pick_bootstrap(Rng& rng) const;
  void depart_machine(uint32_t machine);

  EpochParams params_;
  uint64_t seed_;
  size_t epoch_ = 0;

  std::vector<Machine> machines_;
  // Ring currently serving as the old pair (active ids), index-aligned
  // with old_base_.
  std::shared_ptr<const InputGraph> old_base_;
  std::vector<uint32_t> ring_machine_;   // ring idx -> machine
  ServingGraph old_[2];
  GroupSizePolicy policy_;
  double lnln_estimate_ = 0.0;
  size_t slots_per_group_ = 0;

  // Per-machine membership references into the serving pair, used for
  // departure bookkeeping: (graph, group, slot).
  struct SlotRef {
    uint8_t graph;
    uint32_t group;
    uint32_t slot;
  };
  std::vector<std::vector<SlotRef>> member_refs_;

  std::vector<std::vector<IdPoint>> rings_by_epoch_;  // creation epoch -> ids
  std::vector<EpochMetricsRow> metrics_;
  std::vector<CensusRow> census_;
  std::vector<uint32_t> old_dep_counts_[2];  // good departures per serving group
  std::vector<uint8_t> machine_alive_;       // shared with the epoch builder

  int graph_count() const { return params_.single_graph_mode ? 1 : 2; }
};

}  // namespace tinygroups
