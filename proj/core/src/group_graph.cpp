#include "tinygroups/group_graph.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "tinygroups/hashing.hpp"

namespace tinygroups {

size_t Group::bad_count() const {
  size_t c = 0;
  for (const auto& m : members) c += m.allegiance == Allegiance::bad;
  return c;
}

size_t Group::live_count() const {
  size_t c = 0;
  for (const auto& m : members) c += m.alive;
  return c;
}

size_t Group::live_good_count() const {
  size_t c = 0;
  for (const auto& m : members) c += m.alive && m.allegiance == Allegiance::good;
  return c;
}

bool Group::has_live_good_majority() const {
  size_t live = live_count();
  return live > 0 && 2 * live_good_count() > live;
}

bool GroupSizePolicy::size_good(const Group& g) const {
  return g.members.size() >= min_size && g.members.size() <= max_size;
}

bool GroupSizePolicy::composition_good(const Group& g) const {
  return static_cast<double>(g.bad_count()) <=
         bad_fraction_cap * static_cast<double>(g.members.size());
}

bool GroupSizePolicy::group_good(const Group& g) const {
  return size_good(g) && composition_good(g) && g.has_live_good_majority();
}

IdPoint membership_point(std::string_view graph_tag, IdPoint w, uint32_t slot) {
  std::string tag = "member-";
  tag += graph_tag;
  return IdPoint{hash64_words(tag, {w.value, slot})};
}

GroupGraph GroupGraph::build_direct(std::shared_ptr<const InputGraph> base,
                                    std::string_view hash_tag, size_t slots_per_group,
                                    std::span<const Allegiance> id_allegiance) {
  const RingSet& ring = base->ids();
  if (id_allegiance.size() != ring.size()) {
    throw std::invalid_argument("allegiance table size mismatch");
  }
  std::vector<Group> groups(ring.size());
  for (size_t i = 0; i < ring.size(); ++i) {
    Group& g = groups[i];
    g.leader = ring.at(i);
    g.members.reserve(slots_per_group);
    for (uint32_t s = 0; s < slots_per_group; ++s) {
      IdPoint pt = membership_point(hash_tag, g.leader, s);
      size_t idx = ring.successor_index(pt);
      g.members.push_back({ring.at(idx), id_allegiance[idx], true});
    }
  }
  return GroupGraph(std::move(base), std::move(groups));
}

GroupGraph GroupGraph::empty_shell(std::shared_ptr<const InputGraph> base) {
  std::vector<Group> groups(base->size());
  for (size_t i = 0; i < groups.size(); ++i) groups[i].leader = base->ids().at(i);
  return GroupGraph(std::move(base), std::move(groups));
}

void GroupGraph::mark_colors_synthetic(double p_f, Rng& rng) {
  if (!(p_f >= 0.0) || !(p_f <= 1.0)) throw std::invalid_argument("p_f outside [0,1]");
  for (auto& c : colors_) c = rng.bernoulli(p_f) ? Color::red : Color::blue;
}

void GroupGraph::mark_colors_organic(const GroupSizePolicy& policy) {
  for (size_t i = 0; i < groups_.size(); ++i) {
    bool bad = !policy.group_good(groups_[i]);
    colors_[i] = (bad || groups_[i].confused) ? Color::red : Color::blue;
  }
}

void GroupGraph::mark_all_blue() {
  for (auto& c : colors_) c = Color::blue;
}

size_t GroupGraph::red_count() const {
  size_t c = 0;
  for (Color col : colors_) c += col == Color::red;
  return c;
}

double GroupGraph::red_fraction() const {
  return groups_.empty() ? 0.0 : static_cast<double>(red_count()) / static_cast<double>(size());
}

std::vector<uint32_t> GroupGraph::blue_indices() const {
  std::vector<uint32_t> out;
  for (uint32_t i = 0; i < colors_.size(); ++i) {
    if (colors_[i] == Color::blue) out.push_back(i);
  }
  return out;
}

void GroupGraph::add_adversary_edge(uint32_t red_a, uint32_t red_b) {
  if (colors_[red_a] != Color::red || colors_[red_b] != Color::red) {
    throw std::invalid_argument("adversary edges may only join red groups");
  }
  adversary_edges_.emplace_back(red_a, red_b);
}

SearchOutcome GroupGraph::search_path_idx(uint32_t origin_idx, IdPoint key) const {
  if (colors_[origin_idx] != Color::blue) {
    throw std::invalid_argument("search origin must be a blue group");
  }
  SearchTrace trace = base_->route_from(origin_idx, key);
  SearchOutcome out;
  out.path.reserve(trace.path.size());
  uint64_t cost = 0;
  uint32_t prev = trace.path[0];
  out.path.push_back(prev);
  for (size_t i = 1; i < trace.path.size(); ++i) {
    uint32_t cur = trace.path[i];
    cost += static_cast<uint64_t>(groups_[prev].members.size()) *
            static_cast<uint64_t>(groups_[cur].members.size());
    out.path.push_back(cur);
    if (colors_[cur] == Color::red) {
      out.success = false;
      out.blocking = cur;
      ledger_.inter_group += cost;
      return out;
    }
    prev = cur;
  }
  out.success = true;
  ledger_.inter_group += cost;
  return out;
}

SearchOutcome GroupGraph::search_path(IdPoint origin_leader, IdPoint key) const {
  return search_path_idx(static_cast<uint32_t>(base_->ids().index_of(origin_leader)), key);
}

SearchTrialStats GroupGraph::run_search_trials(size_t trials, Rng& rng) const {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  SearchTrialStats stats;
  stats.traversals.assign(size(), 0);
  for (size_t t = 0; t < trials; ++t) {
    uint32_t origin = static_cast<uint32_t>(rng.index(size()));
    IdPoint key{rng.next()};
    if (colors_[origin] != Color::blue) {
      stats.skipped++;
      continue;
    }
    SearchOutcome out = search_path_idx(origin, key);
    stats.counted++;
    stats.failed += !out.success;
    stats.total_cost += secure_route_cost(out);
    stats.total_path_groups += out.path.size();
    for (uint32_t idx : out.path) stats.traversals[idx]++;
  }
  return stats;
}

double SearchTrialStats::mean_path_groups() const {
  return counted == 0 ? 0.0
                      : static_cast<double>(total_path_groups) / static_cast<double>(counted);
}

double SearchTrialStats::x_hat() const {
  return counted == 0 ? 1.0 : static_cast<double>(failed) / static_cast<double>(counted);
}

double SearchTrialStats::x_hat_unconditional() const {
  size_t total = counted + skipped;
  return total == 0 ? 1.0
                    : static_cast<double>(failed + skipped) / static_cast<double>(total);
}

double GroupGraph::estimate_responsibility(IdPoint target_leader, size_t trials,
                                           Rng& rng) const {
  uint32_t target = static_cast<uint32_t>(base_->ids().index_of(target_leader));
  SearchTrialStats stats = run_search_trials(trials, rng);
  if (stats.counted == 0) return 0.0;
  return static_cast<double>(stats.traversals[target]) / static_cast<double>(stats.counted);
}

double GroupGraph::measure_failure_x(size_t trials, Rng& rng) const {
  return run_search_trials(trials, rng).x_hat();
}

uint64_t GroupGraph::secure_route_cost(const SearchOutcome& outcome) const {
  uint64_t cost = 0;
  for (size_t i = 1; i < outcome.path.size(); ++i) {
    cost += static_cast<uint64_t>(groups_[outcome.path[i - 1]].members.size()) *
            static_cast<uint64_t>(groups_[outcome.path[i]].members.size());
  }
  return cost;
}

uint64_t majority_filter(std::span<const std::pair<IdPoint, uint64_t>> received) {
  if (received.empty()) throw std::invalid_argument("majority filter over no senders");
  std::map<uint64_t, size_t> votes;
  for (const auto& [sender, payload] : received) votes[payload]++;
  for (const auto& [payload, count] : votes) {
    if (2 * count > received.size()) return payload;
  }
  throw std::runtime_error("filter inconclusive");
}

}  // namespace tinygroups
