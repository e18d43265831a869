#include "tinygroups/experiments.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "tinygroups/epochs.hpp"
#include "tinygroups/gossip.hpp"
#include "tinygroups/group_graph.hpp"
#include "tinygroups/hashing.hpp"
#include "tinygroups/oracles.hpp"
#include "tinygroups/pow.hpp"

namespace tinygroups {

namespace {

using nlohmann::json;

std::string render_row(const std::map<std::string, double>& row) {
  json j;
  for (const auto& [k, v] : row) {
    if (std::isnan(v)) {
      j[k] = nullptr;
    } else if (v == std::floor(v) && std::abs(v) < 1e15) {
      j[k] = static_cast<int64_t>(v);
    } else {
      j[k] = v;
    }
  }
  return j.dump();
}

std::vector<Allegiance> draw_allegiance(size_t n, double beta, uint64_t seed) {
  std::vector<Allegiance> table(n, Allegiance::good);
  size_t bad = static_cast<size_t>(beta * static_cast<double>(n));
  Rng rng = Rng::derive(seed, "allegiance-static");
  std::vector<uint32_t> order(n);
  for (uint32_t i = 0; i < n; ++i) order[i] = i;
  for (size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  for (size_t i = 0; i < bad; ++i) table[order[i]] = Allegiance::bad;
  return table;
}

struct StaticWorld {
  std::shared_ptr<const InputGraph> base;
  GroupGraph graph;
  size_t slots = 0;
  double lnln = 0.0;
};

StaticWorld build_static_world(const SimConfig& config, uint64_t seed) {
  Rng ring_rng = Rng::derive(seed, "ring");
  RingSet ring = RingSet::random(config.n, ring_rng);
  auto base = std::make_shared<const InputGraph>(InputGraph::build(std::move(ring)));
  double lnln = estimate_loglog_n(ring_gaps(base->ids()));
  size_t slots = static_cast<size_t>(std::ceil(config.d2 * lnln));
  auto allegiance = draw_allegiance(config.n, config.beta, seed);
  GroupGraph graph = GroupGraph::build_direct(base, "g1", slots, allegiance);
  return {base, std::move(graph), slots, lnln};
}

TrialResult run_e1(const SimConfig& config, uint64_t seed) {
  TrialResult out;
  out.seed = seed;
  StaticWorld world = build_static_world(config, seed);

  // All-blue calibration pass: path-length factor and congestion.
  world.graph.mark_all_blue();
  Rng calib_rng = Rng::derive(seed, "trials-calibration");
  SearchTrialStats calib = world.graph.run_search_trials(config.trials, calib_rng);
  double exposure = calib.mean_path_groups() - 1.0;  // origin is conditioned blue

  Rng color_rng = Rng::derive(seed, "colors");
  world.graph.mark_colors_synthetic(config.p_f, color_rng);
  Rng trial_rng = Rng::derive(seed, "trials");
  SearchTrialStats stats = world.graph.run_search_trials(config.trials, trial_rng);

  double max_rho = 0.0, sum_red_rho = 0.0;
  for (uint32_t i = 0; i < world.graph.size(); ++i) {
    double rho = stats.counted == 0 ? 0.0
                                    : static_cast<double>(stats.traversals[i]) /
                                          static_cast<double>(stats.counted);
    max_rho = std::max(max_rho, rho);
    if (!world.graph.is_blue(i)) sum_red_rho += rho;
  }

  std::map<std::string, double> row;
  row["seed"] = static_cast<double>(seed);
  row["n"] = static_cast<double>(config.n);
  row["p_f"] = config.p_f;
  row["X_hat"] = stats.x_hat();
  row["X_hat_unconditional"] = stats.x_hat_unconditional();
  row["max_rho"] = max_rho;
  row["sum_red_rho"] = sum_red_rho;
  row["msg_cost_mean"] = stats.counted == 0 ? 0.0
                                            : static_cast<double>(stats.total_cost) /
                                                  static_cast<double>(stats.counted);
  row["mean_path_groups"] = stats.mean_path_groups();
  row["calib_exposure"] = exposure;
  row["x_over_pf"] = config.p_f > 0.0 ? stats.x_hat() / config.p_f : 0.0;
  row["red_fraction"] = world.graph.red_fraction();
  row["slots_per_group"] = static_cast<double>(world.slots);
  out.rows.push_back(row);
  out.jsonl_lines.push_back(render_row(row));

  if (config.dump_graph) {
    out.artifacts.emplace_back("graph_seed" + std::to_string(seed) + ".json",
                               world.base->to_adjacency_json());
  }
  return out;
}

TrialResult run_dynamic(const SimConfig& config, uint64_t seed, bool single_mode) {
  TrialResult out;
  out.seed = seed;
  EpochParams params;
  params.n = config.n;
  params.beta = config.beta;
  params.delta = config.delta;
  params.delta2 = config.delta2;
  params.d1 = config.d1;
  params.d2 = config.d2;
  params.T = config.T;
  params.epochs = config.epochs;
  params.churn_fraction = config.churn_fraction;
  params.initial_red_fraction = config.initial_red_fraction;
  params.all_blue_initial = config.all_blue_initial;
  params.single_graph_mode = single_mode;
  params.link_sweep_passes = config.link_sweep_passes;
  params.bootstrap_log_factor = config.bootstrap_log_factor;
  params.adversary = config.strategy();

  EpochSimulation sim(params, seed);
  sim.run();
  for (const EpochMetricsRow& m : sim.metrics()) {
    std::map<std::string, double> row;
    row["seed"] = static_cast<double>(seed);
    row["epoch"] = static_cast<double>(m.epoch);
    row["n"] = static_cast<double>(config.n);
    row["ring_size"] = static_cast<double>(m.ring_size);
    row["red_fraction_g1"] = m.red_fraction_g1;
    row["red_fraction_g2"] = m.red_fraction_g2;
    row["confused_fraction"] = m.confused_fraction;
    row["bad_composition_fraction"] = m.bad_composition_fraction;
    row["mean_memberships"] = m.mean_memberships;
    row["mean_linked_groups"] = m.mean_linked_groups;
    row["erroneous_accepts_mean"] = m.erroneous_accepts_mean;
    row["unfilled_slot_fraction"] = m.unfilled_slot_fraction;
    row["construction_fail_rate"] = m.construction_fail_rate;
    row["msg_inter_group"] = static_cast<double>(m.msg_inter_group);
    row["msg_group_internal"] = static_cast<double>(m.msg_group_internal);
    row["spam_requests_seen"] = static_cast<double>(m.spam_requests_seen);
    row["spam_requests_accepted"] = static_cast<double>(m.spam_requests_accepted);
    row["single_graph_mode"] = single_mode ? 1.0 : 0.0;
    out.rows.push_back(row);
    out.jsonl_lines.push_back(render_row(row));
  }
  return out;
}

TrialResult run_e3(const SimConfig& config, uint64_t seed) {
  TrialResult out;
  out.seed = seed;
  const size_t n = config.pow_units_n;
  PuzzleParams params;
  params.epoch_steps = 4 * static_cast<uint64_t>(n);
  params.attempts_per_unit_step = config.tau_rate;
  params.tau = calibrate_tau(params.epoch_steps, params.attempts_per_unit_step);
  params.sigma_bits = sigma_bits_for(config.ell, n);
  params.epsilon = config.epsilon;

  double beta = config.beta_over_3 ? config.beta / 3.0 : config.beta;
  ComputeBudget budget;
  budget.adversary_units = static_cast<size_t>(beta * static_cast<double>(n));
  budget.good_units = n - budget.adversary_units;

  uint64_t window =
      static_cast<uint64_t>((1.0 + config.epsilon) * static_cast<double>(params.epoch_steps) / 2.0);
  Rng count_rng = Rng::derive(seed, "pow-count");
  uint64_t count = adversary_certificate_count(budget, window, params, count_rng);

  // Honest solve-time concentration against the exact geometric law.
  uint64_t lo = static_cast<uint64_t>(0.8 * static_cast<double>(params.epoch_steps) / 2.0);
  uint64_t hi = static_cast<uint64_t>(1.2 * static_cast<double>(params.epoch_steps) / 2.0);
  double attempts_per_step = params.attempts_per_unit_step;
  auto cdf_at_steps = [&](uint64_t steps) {
    double a = static_cast<double>(steps) * attempts_per_step;
    return 1.0 - std::exp(a * std::log1p(-params.tau));
  };
  double predicted_mass = cdf_at_steps(hi) - cdf_at_steps(lo);
  size_t timing_units = 2000;
  size_t in_window = 0;
  Rng timing_rng = Rng::derive(seed, "pow-timing");
  double log_q = std::log1p(-params.tau);
  for (size_t u = 0; u < timing_units; ++u) {
    double draw = std::floor(std::log(1.0 - timing_rng.unit()) / log_q) + 1.0;
    double steps = draw / attempts_per_step;
    in_window += steps > static_cast<double>(lo) && steps <= static_cast<double>(hi);
  }
  double timing_frac = static_cast<double>(in_window) / static_cast<double>(timing_units);

  std::map<std::string, double> row;
  row["seed"] = static_cast<double>(seed);
  row["n"] = static_cast<double>(n);
  row["adversary_units"] = static_cast<double>(budget.adversary_units);
  row["window_steps"] = static_cast<double>(window);
  row["adversary_id_count"] = static_cast<double>(count);
  row["count_bound"] = 1.1 * static_cast<double>(budget.adversary_units) * 1.1;
  row["tau"] = params.tau;
  row["timing_in_window_frac"] = timing_frac;
  row["timing_predicted_mass"] = predicted_mass;

  // Uniformity of materialized ids, honest and biased, two-hash and
  // the single-hash ablation. Only the first seed pays for hashing.
  if (seed == config.seed_begin) {
    std::vector<uint8_t> r(params.sigma_bits / 8);
    Rng rrng = Rng::derive(seed, "pow-r");
    for (auto& byte : r) byte = static_cast<uint8_t>(rrng.next() & 0xff);

    auto chi_square_of = [&](PowBehavior behavior, bool ablation) {
      PuzzleParams p2 = params;
      p2.single_hash_ablation = ablation;
      // A large per-unit window guarantees enough solutions.
      ComputeBudget one;
      one.adversary_units = 1;
      Rng genrng = Rng::derive(seed, "pow-uniformity", static_cast<uint64_t>(behavior),
                               ablation ? 1 : 0);
      std::vector<uint64_t> bins(16, 0);
      size_t got = 0;
      while (got < config.pow_samples) {
        auto certs = adversary_generate(one, params.epoch_steps * 4, p2, behavior, r,
                                        /*epoch_valid=*/1, genrng);
        for (const auto& c : certs) {
          bins[c.id_value.value >> 60]++;
          if (++got >= config.pow_samples) break;
        }
      }
      return chi_square_stat(bins);
    };
    double critical = chi_square_critical(15, 0.01);
    row["chi2_critical"] = critical;
    row["chi2_honest"] = chi_square_of(PowBehavior::honest_rate, false);
    row["chi2_biased_two_hash"] = chi_square_of(PowBehavior::bias_small_outputs, false);
    row["chi2_biased_single_hash"] = chi_square_of(PowBehavior::bias_small_outputs, true);
  }

  // Pre-computation ablation: with a fixed signing string the
  // adversary can hoard several epochs of ids and release them at
  // once; rotating strings expire the hoard.
  {
    const int hoard_epochs = 5;
    Rng fixed_rng = Rng::derive(seed, "pow-hoard-fixed");
    uint64_t fixed_valid = 0;
    for (int e = 0; e < hoard_epochs; ++e) {
      fixed_valid += adversary_certificate_count(budget, window, params, fixed_rng);
    }
    Rng rot_rng = Rng::derive(seed, "pow-hoard-rotating");
    uint64_t rotating_valid = 0;
    for (int e = 0; e < hoard_epochs; ++e) {
      uint64_t c = adversary_certificate_count(budget, window, params, rot_rng);
      rotating_valid = c;  // only the current epoch's string still verifies
    }
    row["hoard_fixed_string_ids"] = static_cast<double>(fixed_valid);
    row["hoard_rotating_string_ids"] = static_cast<double>(rotating_valid);
  }

  out.rows.push_back(row);
  out.jsonl_lines.push_back(render_row(row));
  return out;
}

TrialResult run_e4(const SimConfig& config, uint64_t seed) {
  TrialResult out;
  out.seed = seed;
  StaticWorld world = build_static_world(config, seed);
  Rng color_rng = Rng::derive(seed, "colors");
  world.graph.mark_colors_synthetic(config.p_f, color_rng);

  GossipParams gp;
  gp.T = config.steps();
  gp.c0 = config.c0;
  gp.d0 = config.d0;
  gp.b = config.b;
  gp.string_bits = sigma_bits_for(config.ell, config.n);

  std::vector<uint8_t> r(gp.string_bits / 8);
  Rng rrng = Rng::derive(seed, "gossip-r");
  for (auto& byte : r) byte = static_cast<uint8_t>(rrng.next() & 0xff);

  AdversaryStrategy strategy = config.strategy();
  std::string trace;
  GossipResult res = run_gossip(world.graph, gp, strategy, r, seed, config.gossip_trace,
                                config.gossip_trace ? &trace : nullptr);

  size_t max_set = 0;
  for (uint32_t idx : res.component) {
    max_set = std::max(max_set, res.solution_sets[idx].size());
  }
  double ln_n = std::log(static_cast<double>(config.n));
  double ln_T = std::log(static_cast<double>(gp.T));
  double bound_unit = static_cast<double>(config.n) * ln_T * ln_n * ln_n * ln_n;

  std::map<std::string, double> row;
  row["seed"] = static_cast<double>(seed);
  row["n"] = static_cast<double>(config.n);
  row["p_f"] = config.p_f;
  row["component_size"] = static_cast<double>(res.component.size());
  row["agreement"] = res.agreement(world.graph) ? 1.0 : 0.0;
  row["max_solution_set"] = static_cast<double>(max_set);
  row["solution_set_cap"] = std::ceil(config.d0 * ln_n);
  row["gossip_messages"] = static_cast<double>(res.total_messages);
  row["gossip_forwards"] = static_cast<double>(res.total_forward_events);
  row["kappa_messages"] = static_cast<double>(res.total_messages) / bound_unit;
  row["diameter_steps"] = static_cast<double>(res.diameter_steps);
  row["d_prime_ln_n"] = static_cast<double>(res.d_prime_ln_n);
  row["adversary_injected"] = res.adversary_injected ? 1.0 : 0.0;
  out.rows.push_back(row);
  out.jsonl_lines.push_back(render_row(row));
  if (config.gossip_trace) {
    out.artifacts.emplace_back("gossip_trace_seed" + std::to_string(seed) + ".jsonl",
                               trace);
  }
  return out;
}

}  // namespace

TrialResult run_single_trial(const SimConfig& config, uint64_t seed) {
  switch (config.experiment) {
    case Experiment::e1: return run_e1(config, seed);
    case Experiment::e2: return run_dynamic(config, seed, false);
    case Experiment::e3: return run_e3(config, seed);
    case Experiment::e4: return run_e4(config, seed);
    case Experiment::e5: return run_dynamic(config, seed, true);
  }
  throw std::logic_error("unreachable experiment");
}

std::vector<TrialResult> run_experiment(const SimConfig& config) {
  config.validate();
  const uint64_t begin = config.seed_begin, end = config.seed_end;
  const size_t count = static_cast<size_t>(end - begin + 1);
  std::vector<TrialResult> results(count);

  size_t workers = config.threads == 0
                       ? std::max<size_t>(1, std::thread::hardware_concurrency())
                       : config.threads;
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (size_t i = 0; i < count; ++i) {
      results[i] = run_single_trial(config, begin + i);
    }
    return results;
  }
  std::atomic<size_t> cursor{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (;;) {
          size_t i = cursor.fetch_add(1);
          if (i >= count) return;
          results[i] = run_single_trial(config, begin + i);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

}  // namespace tinygroups
