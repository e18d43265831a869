#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tinygroups/config.hpp"
#include "tinygroups/experiments.hpp"
#include "tinygroups/report.hpp"

using namespace tinygroups;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

size_t line_count(const std::string& s) {
  size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("config parses and round-trips") {
  SimConfig c = SimConfig::from_json_text(
      R"({"experiment":"e2","n":512,"beta":0.04,"epochs":2,"seed_begin":3,"seed_end":5})");
  CHECK(c.experiment == Experiment::e2);
  CHECK(c.n == 512);
  CHECK(c.beta == 0.04);
  SimConfig back = SimConfig::from_json_text(c.to_json_text());
  CHECK(back.n == c.n);
  CHECK(back.epochs == c.epochs);
  CHECK(back.seed_begin == c.seed_begin);
}

TEST_CASE("unknown keys are rejected loudly") {
  CHECK_THROWS_WITH_AS(SimConfig::from_json_text(R"({"n":512,"trails":10})"),
                       doctest::Contains("unknown key \"trails\""), std::invalid_argument);
}

TEST_CASE("malformed and invalid configs fail before running") {
  CHECK_THROWS(SimConfig::from_json_text("{"));
  CHECK_THROWS(SimConfig::from_json_text("[1,2]"));
  CHECK_THROWS(SimConfig::from_json_text(R"({"beta":0.9})"));
  CHECK_THROWS(SimConfig::from_json_text(R"({"beta":0.2,"delta":2.0})"));  // (1+d)b >= 1/2
  CHECK_THROWS(SimConfig::from_json_text(R"({"seed_begin":9,"seed_end":3})"));
  CHECK_THROWS(SimConfig::from_json_text(R"({"n":64,"d1":1.0,"d2":24})"));  // degenerate groups
  CHECK_THROWS(SimConfig::from_json_text(R"({"adversary":"chaotic"})"));
  CHECK_THROWS(SimConfig::from_json_text(R"({"p_f":1.5})"));
}

TEST_CASE("experiment names round-trip") {
  for (auto e : {Experiment::e1, Experiment::e2, Experiment::e3, Experiment::e4,
                 Experiment::e5}) {
    CHECK(parse_experiment(experiment_name(e)) == e);
  }
  CHECK_THROWS(parse_experiment("e9"));
}

TEST_CASE("reports are emitted, shaped, and idempotent") {
  SimConfig c;
  c.experiment = Experiment::e1;
  c.n = 128;
  c.trials = 500;
  c.seed_begin = 0;
  c.seed_end = 3;
  c.threads = 1;
  auto results = run_experiment(c);
  REQUIRE(results.size() == 4);

  auto dir = std::filesystem::temp_directory_path() / "tinygroups_report_test";
  std::filesystem::remove_all(dir);
  emit_report(results, dir.string());

  std::string jsonl = slurp(dir / "trials.jsonl");
  std::string csv = slurp(dir / "summary.csv");
  std::string digest = slurp(dir / "digest.txt");
  CHECK(line_count(jsonl) == 4);          // one row per seed for the static experiment
  CHECK(line_count(csv) == 4 + 1);        // rows = epochs x seeds, plus the header
  CHECK(digest.find("X_hat") != std::string::npos);

  emit_report(results, dir.string());
  CHECK(slurp(dir / "trials.jsonl") == jsonl);
  CHECK(slurp(dir / "summary.csv") == csv);
  CHECK(slurp(dir / "digest.txt") == digest);

  CHECK_THROWS(emit_report({}, dir.string()));
}

TEST_CASE("csv rows scale with epochs times seeds") {
  SimConfig c;
  c.experiment = Experiment::e2;
  c.n = 128;
  c.epochs = 2;
  c.seed_begin = 0;
  c.seed_end = 2;
  c.threads = 1;
  c.churn_fraction = 0.0;
  c.all_blue_initial = true;
  auto results = run_experiment(c);
  auto dir = std::filesystem::temp_directory_path() / "tinygroups_report_test2";
  std::filesystem::remove_all(dir);
  emit_report(results, dir.string());
  CHECK(line_count(slurp(dir / "summary.csv")) == 2 * 3 + 1);
}

TEST_CASE("serial and parallel runs emit identical bytes") {
  SimConfig c;
  c.experiment = Experiment::e1;
  c.n = 256;
  c.trials = 2000;
  c.seed_begin = 5;
  c.seed_end = 12;

  c.threads = 1;
  auto serial = run_experiment(c);
  c.threads = 4;
  auto parallel = run_experiment(c);
  REQUIRE(serial.size() == parallel.size());
  for (size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].jsonl_lines == parallel[i].jsonl_lines);
  }
}

TEST_CASE("dynamic runs are reproducible across processes in spirit") {
  SimConfig c;
  c.experiment = Experiment::e2;
  c.n = 128;
  c.epochs = 2;
  c.churn_fraction = 0.1;
  c.adversary = "worst";
  c.seed_begin = 0;
  c.seed_end = 1;
  c.threads = 2;
  auto a = run_experiment(c);
  auto b = run_experiment(c);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].jsonl_lines == b[i].jsonl_lines);
}

TEST_CASE("graph dumps ride along as artifacts") {
  SimConfig c;
  c.experiment = Experiment::e1;
  c.n = 128;
  c.trials = 100;
  c.seed_begin = 0;
  c.seed_end = 0;
  c.dump_graph = true;
  c.threads = 1;
  auto results = run_experiment(c);
  REQUIRE(results.size() == 1);
  REQUIRE(results[0].artifacts.size() == 1);
  CHECK(results[0].artifacts[0].first == "graph_seed0.json");
  CHECK(results[0].artifacts[0].second.find("\"neighbors\"") != std::string::npos);
}
