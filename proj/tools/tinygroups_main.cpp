// Command-line front end: `tinygroups run` executes one experiment
// over a seed range and writes reports; `tinygroups params` prints the
// derived protocol constants for a configuration.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tinygroups/config.hpp"
#include "tinygroups/experiments.hpp"
#include "tinygroups/gossip.hpp"
#include "tinygroups/oracles.hpp"
#include "tinygroups/pow.hpp"
#include "tinygroups/report.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitCheckFailed = 3;

bool parse_seed_range(const std::string& text, uint64_t* begin, uint64_t* end) {
  auto dots = text.find("..");
  if (dots == std::string::npos) return false;
  try {
    *begin = std::stoull(text.substr(0, dots));
    *end = std::stoull(text.substr(dots + 2));
  } catch (...) {
    return false;
  }
  return *end >= *begin;
}

double row_at(const std::map<std::string, double>& row, const std::string& key,
              double fallback = 0.0) {
  auto it = row.find(key);
  return it == row.end() ? fallback : it->second;
}

// Per-experiment quick assertions for --check runs. The acceptance
// suite under tests/ is the authoritative gate; these catch obviously
// broken sweeps early.
bool check_results(const tinygroups::SimConfig& config,
                   const std::vector<tinygroups::TrialResult>& results) {
  using tinygroups::Experiment;
  size_t bad_seeds = 0;
  switch (config.experiment) {
    case Experiment::e1: {
      for (const auto& r : results) {
        for (const auto& row : r.rows) {
          bool ok = row_at(row, "X_hat") <= row_at(row, "sum_red_rho") + 1e-12;
          if (config.p_f > 0.0) {
            ok = ok && row_at(row, "x_over_pf") <= 1.5 * row_at(row, "calib_exposure") + 1e-9;
          }
          if (!ok) bad_seeds++;
        }
      }
      if (bad_seeds > 0) {
        std::fprintf(stderr, "check: %zu e1 rows violated X-hat bounds\n", bad_seeds);
        return false;
      }
      return true;
    }
    case Experiment::e2: {
      for (const auto& r : results) {
        double baseline = -1.0;
        bool violated = false;
        for (const auto& row : r.rows) {
          double frac = row_at(row, "red_fraction_g1");
          double g2 = row_at(row, "red_fraction_g2", std::nan(""));
          double avg = std::isnan(g2) ? frac : 0.5 * (frac + g2);
          if (baseline < 0.0) {
            baseline = avg;
            continue;
          }
          double worst = std::isnan(g2) ? frac : std::max(frac, g2);
          if (worst > 2.0 * baseline + 1e-12) violated = true;
        }
        bad_seeds += violated;
      }
      bool ok = 10 * bad_seeds <= results.size();
      if (!ok) {
        std::fprintf(stderr, "check: %zu/%zu e2 seeds accumulated red groups\n", bad_seeds,
                     results.size());
      }
      return ok;
    }
    case Experiment::e3: {
      for (const auto& r : results) {
        for (const auto& row : r.rows) {
          if (row_at(row, "adversary_id_count") > row_at(row, "count_bound")) bad_seeds++;
        }
      }
      bool ok = 100 * bad_seeds <= results.size();
      if (!ok) {
        std::fprintf(stderr, "check: %zu/%zu e3 seeds exceeded the id-count bound\n",
                     bad_seeds, results.size());
      }
      return ok;
    }
    case Experiment::e4: {
      for (const auto& r : results) {
        for (const auto& row : r.rows) {
          if (row_at(row, "agreement") != 1.0 ||
              row_at(row, "max_solution_set") > row_at(row, "solution_set_cap")) {
            bad_seeds++;
          }
        }
      }
      if (bad_seeds > 0) {
        std::fprintf(stderr, "check: %zu e4 seeds broke agreement or set-size bounds\n",
                     bad_seeds);
        return false;
      }
      return true;
    }
    case Experiment::e5: {
      for (const auto& r : results) {
        double prev = -1.0;
        bool strictly_up = true;
        for (const auto& row : r.rows) {
          double frac = row_at(row, "red_fraction_g1");
          if (prev >= 0.0 && frac <= prev) strictly_up = false;
          prev = frac;
        }
        bad_seeds += !strictly_up;
      }
      bool ok = 10 * bad_seeds <= 3 * results.size();  // >= 70% strictly increasing
      if (!ok) {
        std::fprintf(stderr, "check: only %zu/%zu e5 seeds grew strictly\n",
                     results.size() - bad_seeds, results.size());
      }
      return ok;
    }
  }
  return true;
}

int run_command(const std::string& config_path, const std::string& experiment,
                const std::string& seeds, const std::string& out_dir, bool check,
                size_t threads) {
  tinygroups::SimConfig config;
  try {
    config = config_path.empty() ? tinygroups::SimConfig()
                                 : tinygroups::SimConfig::from_file(config_path);
    if (!experiment.empty()) config.experiment = tinygroups::parse_experiment(experiment);
    if (!seeds.empty()) {
      if (!parse_seed_range(seeds, &config.seed_begin, &config.seed_end)) {
        throw std::invalid_argument("bad --seeds range, expected a..b");
      }
    }
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (threads != 0) config.threads = threads;
    config.validate();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  }

  try {
    std::vector<tinygroups::TrialResult> results = tinygroups::run_experiment(config);
    tinygroups::emit_report(results, config.out_dir);
    std::cout << tinygroups::render_digest(results);
    std::cout << "wrote " << config.out_dir << "/trials.jsonl, summary.csv, digest.txt\n";
    if (check && !check_results(config, results)) return kExitCheckFailed;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "run failed: %s\n", e.what());
    return 1;
  }
  return kExitOk;
}

int params_command(double beta, size_t n, double k, double delta, double delta2,
                   uint64_t T, double rate) {
  try {
    if (T == 0) T = 4 * static_cast<uint64_t>(n);
    double target = 1.0 / std::pow(std::log(static_cast<double>(n)), k);
    int d1 = tinygroups::size_groups_for_target(beta, delta, target, n, delta2);
    double tau = tinygroups::calibrate_tau(T, rate);
    double lnln = std::log(std::log(static_cast<double>(n)));
    uint64_t dpl = 2 * static_cast<uint64_t>(
                           std::ceil(std::log2(static_cast<double>(n))));
    tinygroups::PhaseClock clock = tinygroups::make_phase_clock(T, dpl);
    std::printf("n                %zu\n", n);
    std::printf("beta             %g\n", beta);
    std::printf("k                %g  (p_f target %.3g)\n", k, target);
    std::printf("sized d1         %d  (group floor %d members)\n", d1,
                static_cast<int>(std::ceil(d1 * lnln)));
    std::printf("tau              %.6g  (expected %g attempts per solution)\n", tau,
                1.0 / tau);
    std::printf("phase1 steps     [0, %llu)\n",
                static_cast<unsigned long long>(clock.phase1_end));
    std::printf("phase2 steps     [%llu, %llu)\n",
                static_cast<unsigned long long>(clock.phase1_end),
                static_cast<unsigned long long>(clock.phase2_end));
    std::printf("phase3 steps     [%llu, %llu)\n",
                static_cast<unsigned long long>(clock.phase2_end),
                static_cast<unsigned long long>(clock.phase3_end));
    return kExitOk;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "params error: %s\n", e.what());
    return kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"group-graph overlay simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run an experiment over a seed range");
  std::string config_path, experiment, seeds, out_dir;
  bool check = false;
  size_t threads = 0;
  run->add_option("--config", config_path, "JSON config file");
  run->add_option("--experiment", experiment, "experiment id (e1..e5)");
  run->add_option("--seeds", seeds, "seed range a..b (inclusive)");
  run->add_option("--out", out_dir, "output directory");
  run->add_flag("--check", check, "apply the per-experiment assertions, exit 3 on failure");
  run->add_option("--threads", threads, "worker threads (0 = auto)");

  auto* params = app.add_subcommand("params", "print derived protocol constants");
  double beta = 0.05, k = 2.0, delta = 1.5, delta2 = 0.0, rate = 1.0;
  size_t n = 1024;
  uint64_t T = 0;
  params->add_option("--beta", beta, "adversary compute fraction");
  params->add_option("--n", n, "system size");
  params->add_option("--k", k, "target exponent for p_f = 1/(ln n)^k");
  params->add_option("--delta", delta, "bad-fraction slack");
  params->add_option("--delta2", delta2, "load-imbalance slack");
  params->add_option("--T", T, "epoch steps (0 = 4n)");
  params->add_option("--rate", rate, "puzzle attempts per unit step");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (run->parsed()) {
    return run_command(config_path, experiment, seeds, out_dir, check, threads);
  }
  return params_command(beta, n, k, delta, delta2, T, rate);
}
