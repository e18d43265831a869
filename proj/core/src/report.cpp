#include "tinygroups/report.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "tinygroups/oracles.hpp"

namespace tinygroups {

namespace {

std::string number_text(double v) { return nlohmann::json(v).dump(); }

std::set<std::string> metric_keys(const std::vector<TrialResult>& results) {
  std::set<std::string> keys;
  for (const auto& r : results) {
    for (const auto& row : r.rows) {
      for (const auto& [k, v] : row) keys.insert(k);
    }
  }
  return keys;
}

}  // namespace

std::string render_digest(const std::vector<TrialResult>& results) {
  std::map<std::string, std::vector<double>> by_metric;
  size_t rows = 0;
  for (const auto& r : results) {
    for (const auto& row : r.rows) {
      rows++;
      for (const auto& [k, v] : row) {
        if (!std::isnan(v)) by_metric[k].push_back(v);
      }
    }
  }
  std::string out;
  out += "rows: " + std::to_string(rows) + "\n";
  out += "metric,mean,p5,p50,p95\n";
  for (const auto& [k, vals] : by_metric) {
    double mean = 0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(vals.size());
    out += k + "," + number_text(mean) + "," + number_text(percentile_of(vals, 5)) + "," +
           number_text(percentile_of(vals, 50)) + "," + number_text(percentile_of(vals, 95)) +
           "\n";
  }
  return out;
}

void emit_report(const std::vector<TrialResult>& results, const std::string& out_dir) {
  if (results.empty()) throw std::invalid_argument("emit_report: no results");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (!fs::is_directory(out_dir)) {
    throw std::runtime_error("emit_report: cannot create " + out_dir);
  }

  {
    std::ofstream jsonl(fs::path(out_dir) / "trials.jsonl", std::ios::trunc);
    if (!jsonl) throw std::runtime_error("emit_report: cannot write trials.jsonl");
    for (const auto& r : results) {
      for (const auto& line : r.jsonl_lines) jsonl << line << "\n";
    }
  }

  {
    std::set<std::string> keys = metric_keys(results);
    std::ofstream csv(fs::path(out_dir) / "summary.csv", std::ios::trunc);
    if (!csv) throw std::runtime_error("emit_report: cannot write summary.csv");
    bool first = true;
    for (const auto& k : keys) {
      csv << (first ? "" : ",") << k;
      first = false;
    }
    csv << "\n";
    for (const auto& r : results) {
      for (const auto& row : r.rows) {
        first = true;
        for (const auto& k : keys) {
          csv << (first ? "" : ",");
          first = false;
          auto it = row.find(k);
          if (it != row.end() && !std::isnan(it->second)) csv << number_text(it->second);
        }
        csv << "\n";
      }
    }
  }

  {
    std::ofstream digest(fs::path(out_dir) / "digest.txt", std::ios::trunc);
    if (!digest) throw std::runtime_error("emit_report: cannot write digest.txt");
    digest << render_digest(results);
  }

  for (const auto& r : results) {
    for (const auto& [name, content] : r.artifacts) {
      std::ofstream f(fs::path(out_dir) / name, std::ios::trunc);
      if (!f) throw std::runtime_error("emit_report: cannot write " + name);
      f << content;
    }
  }
}

}  // namespace tinygroups
