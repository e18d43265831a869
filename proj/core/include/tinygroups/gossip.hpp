#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tinygroups/adversary.hpp"
#include "tinygroups/group_graph.hpp"
#include "tinygroups/idring.hpp"
#include "tinygroups/rng.hpp"

namespace tinygroups {

struct StringMsg {
  std::vector<uint8_t> s;
  uint64_t t_units = 0;  // h(s XOR r_prev) as ring units
  uint32_t origin = 0;   // group index of the generator
};

// Dyadic bin of an output value: t in [2^-j, 2^-(j-1)) gets bin j,
// j clamped to [1, table_size] with underflow collapsing into the
// deepest bin (t = 0 lands there too).
uint32_t bin_index(uint64_t t_units, uint32_t table_size);

enum class OfferResult : uint8_t { forward, drop, invalid };

/**
 * Record-breaker gate: a received string is forwarded iff it strictly
 * beats the smallest output seen so far in its bin and the bin's
 * forward counter is below the cap. Forwarded strings are stored, so
 * each bin retains its record-breaker history for solution sets.
 */
class BinTable {
 public:
  BinTable(uint32_t bins, uint64_t counter_cap);

  OfferResult offer(const StringMsg& msg, std::span<const uint8_t> r_prev);

  uint64_t counter(uint32_t j) const { return bins_[j - 1].count; }
  bool has_min() const { return best_.has_value(); }
  const StringMsg& overall_min() const { return *best_; }

  // Strings from the deepest occupied bin upward until `want` are
  // collected, sorted by output ascending. Throws if nothing was ever
  // observed.
  std::vector<StringMsg> assemble_solution_set(size_t want) const;

  uint64_t total_forwards() const { return forwards_; }

 private:
  struct Bin {
    std::optional<uint64_t> min_t;
    uint64_t count = 0;
    std::vector<StringMsg> stored;
  };
  std::vector<Bin> bins_;
  uint64_t cap_;
  uint64_t forwards_ = 0;
  std::optional<StringMsg> best_;
};

struct GossipParams {
  uint64_t T = 0;             // epoch length; the protocol runs in the first half
  double c0 = 4.0;            // counter cap factor
  double d0 = 4.0;            // solution-set size factor
  double b = 1.0;             // bin count factor
  size_t string_bits = 72;    // individual string length
  uint64_t adversary_budget_draws = 200000;  // rejection budget for a crafted small string
};

struct PhaseClock {
  uint64_t phase1_end = 0;  // steps [0, phase1_end)
  uint64_t phase2_end = 0;  // [phase1_end, phase2_end)
  uint64_t phase3_end = 0;  // [phase2_end, phase3_end), = T/2
  uint32_t phase_at(uint64_t step) const;
};

// Phase boundaries for a propagation window of d_prime_ln_n steps.
PhaseClock make_phase_clock(uint64_t T, uint64_t d_prime_ln_n);

// Largest set of blue groups that can all reach each other through
// successful search paths (strongly connected component of the
// pairwise search-success digraph).
std::vector<uint32_t> giant_component(const GroupGraph& q);

struct GossipResult {
  std::vector<uint32_t> component;             // giant-component group indices
  std::vector<std::optional<StringMsg>> s_star;       // per group, end of phase 2
  std::vector<std::vector<StringMsg>> solution_sets;  // per group, end of phase 3
  uint64_t total_forward_events = 0;
  uint64_t total_messages = 0;       // with the all-to-all member factor
  uint64_t diameter_steps = 0;
  uint64_t d_prime_ln_n = 0;
  bool adversary_injected = false;
  StringMsg injected;
  // Lemma-style agreement: every component member's chosen string is
  // in every other member's solution set.
  bool agreement(const GroupGraph& q) const;
};

/**
 * The half-epoch string protocol over one group graph: phase 1
 * generates (one candidate per good id per step), phase 2 floods each
 * id's minimum through the record-breaker gate, phase 3 keeps
 * flooding without new strings, and solution sets are assembled at
 * the end. A delay_release adversary holds back a small-output string
 * until the final phase-2 step.
 */
GossipResult run_gossip(const GroupGraph& q, const GossipParams& params,
                        const AdversaryStrategy& adversary,
                        std::span<const uint8_t> r_prev, uint64_t seed,
                        bool trace = false, std::string* trace_out = nullptr);

}  // namespace tinygroups
