#pragma once

#include <cstdint>
#include <string>

#include "tinygroups/adversary.hpp"

namespace tinygroups {

enum class Experiment : uint8_t { e1, e2, e3, e4, e5 };

Experiment parse_experiment(const std::string& name);
std::string experiment_name(Experiment e);

/**
 * One flat configuration document for every experiment. Parsed from
 * JSON with unknown keys rejected, so a typo in a sweep fails loudly
 * instead of silently running defaults.
 */
struct SimConfig {
  Experiment experiment = Experiment::e1;
  size_t n = 1024;
  double beta = 0.05;
  double delta = 1.5;
  double delta2 = 0.0;
  double d1 = 8.0;
  double d2 = 24.0;
  double k = 2.0;           // target exponent: p_f target = 1 / (ln n)^k
  uint64_t T = 0;           // 0 = 4n
  size_t epochs = 3;
  double c0 = 4.0;
  double d0 = 4.0;
  double b = 1.0;
  double ell = 10.0;        // string length factor: ell * ln n bits
  double tau_rate = 1.0;    // puzzle attempts per unit per step
  double epsilon = 0.1;
  double p_f = 0.01;        // synthetic red probability (e1, e4)
  double initial_red_fraction = 0.0;  // extra marks on the starting pair (e2, e5)
  bool all_blue_initial = false;
  double churn_fraction = 0.1;
  std::string adversary = "none";
  double adv_spam_factor = 10.0;
  size_t trials = 20000;    // measurement searches per trial
  size_t pow_units_n = 32768;  // system size for the pow experiment
  size_t pow_samples = 10000;  // materialized certificates for uniformity tests
  double bootstrap_log_factor = 1.0;
  size_t link_sweep_passes = 6;
  bool beta_over_3 = false;
  bool dump_graph = false;
  bool gossip_trace = false;
  uint64_t seed_begin = 0;
  uint64_t seed_end = 9;    // inclusive
  size_t threads = 0;       // 0 = hardware concurrency
  std::string out_dir = "out";

  AdversaryStrategy strategy() const;
  uint64_t steps() const { return T == 0 ? 4 * static_cast<uint64_t>(n) : T; }
  double pf_target() const;  // 1 / (ln n)^k

  // Throws std::invalid_argument with a message naming the offense.
  void validate() const;

  static SimConfig from_json_text(const std::string& text);
  static SimConfig from_file(const std::string& path);
  std::string to_json_text() const;
};

}  // namespace tinygroups
