#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tinygroups/idring.hpp"
#include "tinygroups/rng.hpp"

namespace tinygroups {

struct SearchTrace {
  IdPoint origin;
  IdPoint key;
  std::vector<uint32_t> path;  // node indices, origin first, resolved last
  IdPoint resolved;
};

/**
 * Chord-style overlay on a RingSet. Every id links to its ring
 * predecessor, ring successor, and the successors of the 64
 * exponentially spaced finger points w + 2^(i-1) (as 2^-64 ring units),
 * deduplicated and excluding the id itself. Routing is greedy
 * no-overshoot toward the key's successor.
 *
 * The adjacency is a pure function of the id set, so any node can
 * recompute and verify anyone else's neighbor set.
 */
class InputGraph {
 public:
  // Throws if fewer than 2 ids.
  static InputGraph build(RingSet ids);

  const RingSet& ids() const { return ids_; }
  size_t size() const { return ids_.size(); }
  int max_hops() const { return max_hops_; }

  std::span<const uint32_t> neighbors_of(uint32_t idx) const { return adj_[idx]; }
  std::vector<IdPoint> neighbor_set(IdPoint w) const;  // throws if w absent
  size_t degree(uint32_t idx) const { return adj_[idx].size(); }

  // The 64 finger points of w plus the point just clockwise of w
  // (whose successor is w's ring successor). Pure ring arithmetic;
  // does not require w to be in the graph.
  static std::vector<IdPoint> finger_points(IdPoint w);

  SearchTrace route(IdPoint origin, IdPoint key) const;
  SearchTrace route_from(uint32_t origin_idx, IdPoint key) const;
  // Allocation-free variant for hot loops; path gets origin..resolved.
  void route_into(uint32_t origin_idx, IdPoint key, std::vector<uint32_t>& path) const;

  // Per-id empirical probability of being traversed by a search with
  // uniform origin and key. Deterministic for a given rng state.
  std::vector<double> measure_congestion(size_t trials, Rng& rng) const;

  // Fraction of the key space owned by w: the arc from w's
  // predecessor to w.
  double load_share(IdPoint w) const;

  // True iff u is in w's rule-derived neighbor set, established by
  // re-deriving w's finger points and resolving each with a routed
  // search (plus the successor check that certifies a predecessor).
  bool verify_neighbor_claim(IdPoint u, IdPoint w) const;

  std::string to_adjacency_json() const;

 private:
  InputGraph(RingSet ids, std::vector<std::vector<uint32_t>> adj, int max_hops)
      : ids_(std::move(ids)), adj_(std::move(adj)), max_hops_(max_hops) {}

  RingSet ids_;
  std::vector<std::vector<uint32_t>> adj_;
  int max_hops_;
};

}  // namespace tinygroups
