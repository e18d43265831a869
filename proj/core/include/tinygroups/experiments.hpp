#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tinygroups/config.hpp"

namespace tinygroups {

/**
 * One seeded trial's output: flat metric rows (one per epoch for the
 * dynamic experiments, one per trial otherwise) plus the pre-rendered
 * JSON lines they serialize to. Lines are rendered inside the trial
 * so serial and parallel runs emit identical bytes.
 */
struct TrialResult {
  uint64_t seed = 0;
  std::vector<std::map<std::string, double>> rows;
  std::vector<std::string> jsonl_lines;
  std::vector<std::pair<std::string, std::string>> artifacts;  // filename -> content
};

// Runs the configured experiment for every seed in the range,
// optionally across threads; results come back in seed order and are
// bit-identical either way.
std::vector<TrialResult> run_experiment(const SimConfig& config);

// Single-seed runner, the unit the pool dispatches.
TrialResult run_single_trial(const SimConfig& config, uint64_t seed);

}  // namespace tinygroups
