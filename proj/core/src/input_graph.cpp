#include "tinygroups/input_graph.hpp"

#include <algorithm>
#include <stdexcept>

#include "json.hpp"

namespace tinygroups {

std::vector<IdPoint> InputGraph::finger_points(IdPoint w) {
  std::vector<IdPoint> pts;
  pts.reserve(64);
  for (int i = 1; i <= 64; ++i) {
    pts.push_back(w.offset(1ULL << (i - 1)));
  }
  return pts;
}

InputGraph InputGraph::build(RingSet ids) {
  if (ids.size() < 2) throw std::invalid_argument("input graph needs at least 2 ids");
  const size_t n = ids.size();
  std::vector<std::vector<uint32_t>> adj(n);
  for (size_t i = 0; i < n; ++i) {
    IdPoint w = ids.at(i);
    std::vector<uint32_t> nb;
    nb.push_back(static_cast<uint32_t>(ids.predecessor_index(i)));
    for (IdPoint t : finger_points(w)) {
      nb.push_back(static_cast<uint32_t>(ids.successor_index(t)));
    }
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    nb.erase(std::remove(nb.begin(), nb.end(), static_cast<uint32_t>(i)), nb.end());
    adj[i] = std::move(nb);
  }
  // Greedy no-overshoot halves the remaining clockwise arc every hop,
  // so 64 + 2 hops can never be exceeded on a correctly built graph.
  return InputGraph(std::move(ids), std::move(adj), 72);
}

std::vector<IdPoint> InputGraph::neighbor_set(IdPoint w) const {
  size_t i = ids_.index_of(w);
  std::vector<IdPoint> out;
  out.reserve(adj_[i].size());
  for (uint32_t j : adj_[i]) out.push_back(ids_.at(j));
  return out;
}

void InputGraph::route_into(uint32_t origin_idx, IdPoint key,
                            std::vector<uint32_t>& path) const {
  path.clear();
  uint32_t dest = static_cast<uint32_t>(ids_.successor_index(key));
  IdPoint resolved = ids_.at(dest);
  uint32_t cur = origin_idx;
  path.push_back(cur);
  int hops = 0;
  while (cur != dest) {
    if (++hops > max_hops_) throw std::runtime_error("routing divergence");
    uint64_t limit = clockwise_units(ids_.at(cur), resolved);
    uint32_t best = cur;
    uint64_t best_prog = 0;
    for (uint32_t nb : adj_[cur]) {
      uint64_t prog = clockwise_units(ids_.at(cur), ids_.at(nb));
      if (prog <= limit && prog > best_prog) {
        best_prog = prog;
        best = nb;
      }
    }
    if (best == cur) throw std::runtime_error("routing divergence");
    cur = best;
    path.push_back(cur);
  }
}

SearchTrace InputGraph::route_from(uint32_t origin_idx, IdPoint key) const {
  SearchTrace trace;
  trace.origin = ids_.at(origin_idx);
  trace.key = key;
  route_into(origin_idx, key, trace.path);
  trace.resolved = ids_.at(trace.path.back());
  return trace;
}

SearchTrace InputGraph::route(IdPoint origin, IdPoint key) const {
  return route_from(static_cast<uint32_t>(ids_.index_of(origin)), key);
}

std::vector<double> InputGraph::measure_congestion(size_t trials, Rng& rng) const {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  std::vector<uint64_t> hits(size(), 0);
  for (size_t t = 0; t < trials; ++t) {
    uint32_t origin = static_cast<uint32_t>(rng.index(size()));
    IdPoint key{rng.next()};
    SearchTrace tr = route_from(origin, key);
    for (uint32_t idx : tr.path) hits[idx]++;  // paths never revisit a node
  }
  std::vector<double> freq(size());
  for (size_t i = 0; i < size(); ++i) {
    freq[i] = static_cast<double>(hits[i]) / static_cast<double>(trials);
  }
  return freq;
}

double InputGraph::load_share(IdPoint w) const {
  size_t i = ids_.index_of(w);
  IdPoint pred = ids_.at(ids_.predecessor_index(i));
  return clockwise_distance(pred, w);
}

bool InputGraph::verify_neighbor_claim(IdPoint u, IdPoint w) const {
  if (!ids_.contains(u) || !ids_.contains(w) || u == w) return false;
  uint32_t verifier = static_cast<uint32_t>(ids_.index_of(u));
  // u is w's predecessor iff a search just clockwise of u lands on w.
  if (route_from(verifier, u.offset(1)).resolved == w) return true;
  for (IdPoint t : finger_points(w)) {
    if (route_from(verifier, t).resolved == u) return true;
  }
  return false;
}

std::string InputGraph::to_adjacency_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (size_t i = 0; i < size(); ++i) {
    nlohmann::json entry;
    entry["id"] = ids_.at(i).to_hex();
    nlohmann::json nbs = nlohmann::json::array();
    for (uint32_t j : adj_[i]) nbs.push_back(ids_.at(j).to_hex());
    entry["neighbors"] = std::move(nbs);
    arr.push_back(std::move(entry));
  }
  return arr.dump();
}

}  // namespace tinygroups
