#include "tinygroups/gossip.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <set>
#include <stdexcept>

#include "tinygroups/hashing.hpp"

namespace tinygroups {

namespace {

std::vector<uint8_t> xor_bytes(std::span<const uint8_t> a, std::span<const uint8_t> b) {
  std::vector<uint8_t> out(std::max(a.size(), b.size()), 0);
  for (size_t i = 0; i < a.size(); ++i) out[i] ^= a[i];
  for (size_t i = 0; i < b.size(); ++i) out[i] ^= b[i];
  return out;
}

uint64_t string_output(std::span<const uint8_t> s, std::span<const uint8_t> r_prev) {
  return hash64("gossip-h", xor_bytes(s, r_prev));
}

std::vector<uint8_t> random_string(size_t bits, Rng& rng) {
  std::vector<uint8_t> s((bits + 7) / 8);
  for (auto& b : s) b = static_cast<uint8_t>(rng.next() & 0xff);
  return s;
}

}  // namespace

uint32_t bin_index(uint64_t t_units, uint32_t table_size) {
  if (table_size == 0) throw std::invalid_argument("empty bin table");
  if (t_units == 0) return table_size;  // boundary decision: 0 sinks to the deepest bin
  uint32_t j = 65 - static_cast<uint32_t>(std::bit_width(t_units));
  return std::min(j, table_size);
}

BinTable::BinTable(uint32_t bins, uint64_t counter_cap) : bins_(bins), cap_(counter_cap) {
  if (bins == 0 || counter_cap == 0) throw std::invalid_argument("bad bin table shape");
}

OfferResult BinTable::offer(const StringMsg& msg, std::span<const uint8_t> r_prev) {
  if (string_output(msg.s, r_prev) != msg.t_units) return OfferResult::invalid;
  Bin& bin = bins_[bin_index(msg.t_units, static_cast<uint32_t>(bins_.size())) - 1];
  if (bin.min_t.has_value() && msg.t_units >= *bin.min_t) return OfferResult::drop;
  if (bin.count >= cap_) return OfferResult::drop;
  bin.count++;
  bin.min_t = msg.t_units;
  bin.stored.push_back(msg);
  forwards_++;
  if (!best_.has_value() || msg.t_units < best_->t_units) best_ = msg;
  return OfferResult::forward;
}

std::vector<StringMsg> BinTable::assemble_solution_set(size_t want) const {
  bool any = false;
  for (const auto& b : bins_) any = any || !b.stored.empty();
  if (!any) throw std::runtime_error("no strings observed");
  std::vector<StringMsg> out;
  for (size_t j = bins_.size(); j >= 1 && out.size() < want; --j) {
    std::vector<StringMsg> chunk = bins_[j - 1].stored;
    std::sort(chunk.begin(), chunk.end(),
              [](const StringMsg& a, const StringMsg& b) { return a.t_units < b.t_units; });
    for (auto& m : chunk) {
      if (out.size() >= want) break;
      out.push_back(std::move(m));
    }
  }
  return out;
}

uint32_t PhaseClock::phase_at(uint64_t step) const {
  if (step < phase1_end) return 1;
  if (step < phase2_end) return 2;
  if (step < phase3_end) return 3;
  return 0;
}

PhaseClock make_phase_clock(uint64_t T, uint64_t d_prime_ln_n) {
  uint64_t half = T / 2;
  if (half <= 2 * d_prime_ln_n) throw std::invalid_argument("epoch too short for phase layout");
  PhaseClock clock;
  clock.phase1_end = half - 2 * d_prime_ln_n;
  clock.phase2_end = half - d_prime_ln_n;
  clock.phase3_end = half;
  return clock;
}

std::vector<uint32_t> giant_component(const GroupGraph& q) {
  const size_t n = q.size();
  std::vector<uint32_t> blues = q.blue_indices();
  if (blues.empty()) return {};
  // Pairwise search-success digraph over blue groups, then the largest
  // strongly connected component of it.
  std::vector<std::vector<uint32_t>> out_edges(n), in_edges(n);
  for (uint32_t a : blues) {
    for (uint32_t b : blues) {
      if (a == b) continue;
      SearchOutcome res = q.search_path_idx(a, q.group(b).leader);
      if (res.success && res.path.back() == b) {
        out_edges[a].push_back(b);
        in_edges[b].push_back(a);
      }
    }
  }
  // Kosaraju: forward finish order, then reverse sweep.
  std::vector<uint8_t> seen(n, 0);
  std::vector<uint32_t> order;
  order.reserve(blues.size());
  for (uint32_t s : blues) {
    if (seen[s]) continue;
    std::vector<std::pair<uint32_t, size_t>> stack{{s, 0}};
    seen[s] = 1;
    while (!stack.empty()) {
      auto& [v, i] = stack.back();
      if (i < out_edges[v].size()) {
        uint32_t w = out_edges[v][i++];
        if (!seen[w]) {
          seen[w] = 1;
          stack.emplace_back(w, 0);
        }
      } else {
        order.push_back(v);
        stack.pop_back();
      }
    }
  }
  std::fill(seen.begin(), seen.end(), 0);
  std::vector<uint32_t> best;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (seen[*it]) continue;
    std::vector<uint32_t> comp, stack{*it};
    seen[*it] = 1;
    while (!stack.empty()) {
      uint32_t v = stack.back();
      stack.pop_back();
      comp.push_back(v);
      for (uint32_t w : in_edges[v]) {
        if (!seen[w]) {
          seen[w] = 1;
          stack.push_back(w);
        }
      }
    }
    if (comp.size() > best.size()) best = std::move(comp);
  }
  std::sort(best.begin(), best.end());
  return best;
}

bool GossipResult::agreement(const GroupGraph&) const {
  std::vector<std::vector<uint8_t>> chosen;
  for (uint32_t idx : component) {
    if (s_star[idx].has_value()) chosen.push_back(s_star[idx]->s);
  }
  std::sort(chosen.begin(), chosen.end());
  chosen.erase(std::unique(chosen.begin(), chosen.end()), chosen.end());
  for (uint32_t idx : component) {
    const auto& set = solution_sets[idx];
    for (const auto& s : chosen) {
      bool found = false;
      for (const auto& msg : set) found = found || msg.s == s;
      if (!found) return false;
    }
  }
  return true;
}

GossipResult run_gossip(const GroupGraph& q, const GossipParams& params,
                        const AdversaryStrategy& adversary,
                        std::span<const uint8_t> r_prev, uint64_t seed, bool trace,
                        std::string* trace_out) {
  const size_t n = q.size();
  const double ln_n = std::log(static_cast<double>(n));
  const uint32_t table_size =
      static_cast<uint32_t>(std::ceil(params.b * std::log(static_cast<double>(n) *
                                                          static_cast<double>(params.T))));
  const uint64_t cap = static_cast<uint64_t>(std::ceil(params.c0 * ln_n));
  const size_t want = static_cast<size_t>(std::ceil(params.d0 * ln_n));

  GossipResult result;
  result.component = giant_component(q);
  std::vector<uint8_t> in_component(n, 0);
  for (uint32_t idx : result.component) in_component[idx] = 1;

  // Flooding runs over the undirected closure of the neighbor links
  // between blue groups; red groups sit it out in the worst case.
  std::vector<std::set<uint32_t>> sym(n);
  for (uint32_t i = 0; i < n; ++i) {
    for (uint32_t j : q.base().neighbors_of(i)) {
      if (q.is_blue(i) && q.is_blue(j)) {
        sym[i].insert(j);
        sym[j].insert(i);
      }
    }
  }

  // Component diameter in hops bounds propagation time; the phase
  // window is set to twice that.
  uint64_t diam = 0;
  {
    std::vector<uint32_t> dist(n);
    for (uint32_t src : result.component) {
      std::fill(dist.begin(), dist.end(), UINT32_MAX);
      std::deque<uint32_t> bfs{src};
      dist[src] = 0;
      while (!bfs.empty()) {
        uint32_t v = bfs.front();
        bfs.pop_front();
        for (uint32_t w : sym[v]) {
          if (in_component[w] && dist[w] == UINT32_MAX) {
            dist[w] = dist[v] + 1;
            bfs.push_back(w);
          }
        }
      }
      for (uint32_t idx : result.component) {
        if (dist[idx] != UINT32_MAX) diam = std::max<uint64_t>(diam, dist[idx]);
      }
    }
  }
  result.diameter_steps = diam;
  uint64_t dpl = std::max<uint64_t>(2 * diam, 4);
  result.d_prime_ln_n = dpl;
  PhaseClock clock = make_phase_clock(params.T, dpl);

  std::vector<BinTable> tables(n, BinTable(table_size, cap));
  result.s_star.assign(n, std::nullopt);
  result.solution_sets.assign(n, {});

  auto log_trace = [&](uint64_t step, uint32_t origin, uint64_t t, const char* action) {
    if (!trace || trace_out == nullptr) return;
    *trace_out += "{\"step\":" + std::to_string(step) + ",\"origin\":" + std::to_string(origin) +
                  ",\"t\":" + std::to_string(t) + ",\"action\":\"" + action + "\"}\n";
  };

  // Phase 1: every good id behind a blue group generates one candidate
  // string per step and keeps its personal minimum.
  std::vector<std::optional<StringMsg>> own_min(n);
  for (uint32_t i = 0; i < n; ++i) {
    if (!q.is_blue(i)) continue;
    Rng gen = Rng::derive(seed, "gossip-gen", i);
    for (uint64_t step = 0; step < clock.phase1_end; ++step) {
      StringMsg msg;
      msg.s = random_string(params.string_bits, gen);
      msg.t_units = string_output(msg.s, r_prev);
      msg.origin = i;
      if (!own_min[i].has_value() || msg.t_units < own_min[i]->t_units) own_min[i] = msg;
    }
    if (own_min[i].has_value()) log_trace(clock.phase1_end - 1, i, own_min[i]->t_units, "generate");
  }

  // The adversary's own compute during phase 1, used for a delayed
  // release: it keeps drawing until it beats the best good output or
  // runs out of budget.
  std::optional<StringMsg> adv_string;
  std::vector<uint32_t> red_indices;
  for (uint32_t i = 0; i < n; ++i) {
    if (!q.is_blue(i)) red_indices.push_back(i);
  }
  if (adversary.gossip == GossipBehavior::delay_release && !red_indices.empty()) {
    uint64_t good_min = ~0ULL;
    for (uint32_t idx : result.component) {
      if (own_min[idx].has_value()) good_min = std::min(good_min, own_min[idx]->t_units);
    }
    Rng adv = Rng::derive(seed, "gossip-adv");
    StringMsg best;
    best.t_units = ~0ULL;
    best.origin = red_indices[0];
    for (uint64_t d = 0; d < params.adversary_budget_draws; ++d) {
      StringMsg msg;
      msg.s = random_string(params.string_bits, adv);
      msg.t_units = string_output(msg.s, r_prev);
      msg.origin = red_indices[0];
      if (msg.t_units < best.t_units) best = msg;
      if (best.t_units < good_min) break;
    }
    adv_string = best;
  }

  // Deliveries scheduled for the next step: (receiver, sender, msg).
  struct Delivery {
    uint32_t receiver, sender;
    StringMsg msg;
  };
  std::vector<Delivery> pending, next;

  auto forward_from = [&](uint32_t sender, const StringMsg& msg, uint32_t skip) {
    for (uint32_t nb : sym[sender]) {
      if (nb == skip) continue;
      next.push_back({nb, sender, msg});
      result.total_messages += static_cast<uint64_t>(q.group(sender).members.size()) *
                               static_cast<uint64_t>(q.group(nb).members.size());
    }
  };

  for (uint64_t step = clock.phase1_end; step < clock.phase3_end; ++step) {
    next.clear();
    // Phase 2 opens with every id flooding its own minimum.
    if (step == clock.phase1_end) {
      for (uint32_t i = 0; i < n; ++i) {
        if (!q.is_blue(i) || !own_min[i].has_value()) continue;
        q.ledger().group_internal += static_cast<uint64_t>(q.group(i).members.size()) *
                                     static_cast<uint64_t>(q.group(i).members.size());
        if (tables[i].offer(*own_min[i], r_prev) == OfferResult::forward) {
          result.total_forward_events++;
          forward_from(i, *own_min[i], i);
          log_trace(step, i, own_min[i]->t_units, "forward");
        }
      }
    }
    // Adversary release lands so that recipients process it during the
    // final phase-2 step, after which it can only spread in phase 3.
    if (adv_string.has_value() && step + 2 == clock.phase2_end) {
      std::set<uint32_t> recipients;
      for (uint32_t r : red_indices) {
        for (uint32_t nb : q.base().neighbors_of(r)) {
          if (in_component[nb]) recipients.insert(nb);
        }
      }
      if (!recipients.empty() || !result.component.empty()) {
        Rng pick = Rng::derive(seed, "gossip-adv-target");
        if (!result.component.empty()) {
          recipients.insert(result.component[pick.index(result.component.size())]);
        }
        for (uint32_t rcpt : recipients) {
          next.push_back({rcpt, red_indices[0], *adv_string});
          result.total_messages += static_cast<uint64_t>(q.group(red_indices[0]).members.size()) *
                                   static_cast<uint64_t>(q.group(rcpt).members.size());
        }
        result.adversary_injected = true;
        result.injected = *adv_string;
        log_trace(step, red_indices[0], adv_string->t_units, "forward");
      }
    }
    for (const Delivery& d : pending) {
      if (!q.is_blue(d.receiver)) continue;
      OfferResult res = tables[d.receiver].offer(d.msg, r_prev);
      if (res == OfferResult::forward) {
        result.total_forward_events++;
        forward_from(d.receiver, d.msg, d.sender);
        log_trace(step, d.msg.origin, d.msg.t_units, "forward");
      } else {
        log_trace(step, d.msg.origin, d.msg.t_units, "drop");
      }
    }
    std::swap(pending, next);
    // Snapshot the chosen string at the end of phase 2.
    if (step + 1 == clock.phase2_end) {
      for (uint32_t i = 0; i < n; ++i) {
        if (!q.is_blue(i)) continue;
        if (tables[i].has_min()) {
          result.s_star[i] = tables[i].overall_min();
        } else if (own_min[i].has_value()) {
          result.s_star[i] = own_min[i];
        }
      }
    }
  }

  for (uint32_t i : result.component) {
    result.solution_sets[i] = tables[i].assemble_solution_set(want);
  }
  q.ledger().gossip += result.total_messages;
  return result;
}

}  // namespace tinygroups
