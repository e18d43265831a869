#pragma once

#include <string>
#include <vector>

#include "tinygroups/experiments.hpp"

namespace tinygroups {

/**
 * Writes trials.jsonl (raw rows), summary.csv (one row per trial row,
 * metric columns), digest.txt (mean and 5/50/95 percentiles per
 * metric), and any per-trial artifacts. Re-emission over the same
 * results is byte-identical. Throws on empty results or an unwritable
 * directory.
 */
void emit_report(const std::vector<TrialResult>& results, const std::string& out_dir);

// The digest text alone, for tests and the CLI's stdout echo.
std::string render_digest(const std::vector<TrialResult>& results);

}  // namespace tinygroups
