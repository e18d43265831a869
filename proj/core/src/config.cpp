#include "tinygroups/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace tinygroups {

using nlohmann::json;

Experiment parse_experiment(const std::string& name) {
  if (name == "e1") return Experiment::e1;
  if (name == "e2") return Experiment::e2;
  if (name == "e3") return Experiment::e3;
  if (name == "e4") return Experiment::e4;
  if (name == "e5") return Experiment::e5;
  throw std::invalid_argument("unknown experiment: " + name);
}

std::string experiment_name(Experiment e) {
  switch (e) {
    case Experiment::e1: return "e1";
    case Experiment::e2: return "e2";
    case Experiment::e3: return "e3";
    case Experiment::e4: return "e4";
    case Experiment::e5: return "e5";
  }
  return "?";
}

AdversaryStrategy SimConfig::strategy() const {
  AdversaryStrategy s = parse_strategy(adversary);
  if (s.requests != RequestBehavior::none) s.spam_factor = adv_spam_factor;
  return s;
}

double SimConfig::pf_target() const {
  return 1.0 / std::pow(std::log(static_cast<double>(n)), k);
}

void SimConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
  if (n < 8) fail("n too small");
  if (!(beta > 0.0) || !(beta < 0.5)) fail("beta must lie in (0, 1/2)");
  if (!(d1 > 0.0) || !(d1 < d2)) fail("need 0 < d1 < d2");
  if (!((1.0 + delta) * beta < 0.5)) fail("(1+delta)*beta must stay below 1/2");
  double lnln = std::log(std::log(static_cast<double>(n)));
  if (d1 * lnln < 3.0) fail("d1 * ln ln n below 3: groups degenerate at this n");
  if (epochs < 1) fail("epochs must be >= 1");
  if (seed_end < seed_begin) fail("empty seed range");
  if (!(p_f >= 0.0) || !(p_f <= 1.0)) fail("p_f outside [0,1]");
  if (!(initial_red_fraction >= 0.0) || !(initial_red_fraction <= 1.0)) {
    fail("initial_red_fraction outside [0,1]");
  }
  if (!(churn_fraction >= 0.0) || !(churn_fraction < 1.0)) fail("churn_fraction outside [0,1)");
  if (!(tau_rate > 0.0)) fail("tau_rate must be positive");
  if (steps() < 16) fail("T too small");
  if (trials < 1) fail("trials must be >= 1");
  if (!(c0 >= 1.0)) fail("c0 must be >= 1");
  if (!(d0 > 0.0) || !(b >= 1.0) || !(ell > 0.0)) fail("bad gossip constants");
  parse_strategy(adversary);  // throws on unknown names
}

namespace {

template <typename T>
void read_field(const json& j, std::set<std::string>& seen, const char* key, T& out) {
  if (!j.contains(key)) return;
  seen.insert(key);
  out = j.at(key).get<T>();
}

}  // namespace

SimConfig SimConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: bad JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");

  SimConfig c;
  std::set<std::string> seen;
  std::string experiment = experiment_name(c.experiment);
  read_field(j, seen, "experiment", experiment);
  c.experiment = parse_experiment(experiment);
  read_field(j, seen, "n", c.n);
  read_field(j, seen, "beta", c.beta);
  read_field(j, seen, "delta", c.delta);
  read_field(j, seen, "delta2", c.delta2);
  read_field(j, seen, "d1", c.d1);
  read_field(j, seen, "d2", c.d2);
  read_field(j, seen, "k", c.k);
  read_field(j, seen, "T", c.T);
  read_field(j, seen, "epochs", c.epochs);
  read_field(j, seen, "c0", c.c0);
  read_field(j, seen, "d0", c.d0);
  read_field(j, seen, "b", c.b);
  read_field(j, seen, "ell", c.ell);
  read_field(j, seen, "tau_rate", c.tau_rate);
  read_field(j, seen, "epsilon", c.epsilon);
  read_field(j, seen, "p_f", c.p_f);
  read_field(j, seen, "initial_red_fraction", c.initial_red_fraction);
  read_field(j, seen, "all_blue_initial", c.all_blue_initial);
  read_field(j, seen, "churn_fraction", c.churn_fraction);
  read_field(j, seen, "adversary", c.adversary);
  read_field(j, seen, "adv_spam_factor", c.adv_spam_factor);
  read_field(j, seen, "trials", c.trials);
  read_field(j, seen, "pow_units_n", c.pow_units_n);
  read_field(j, seen, "pow_samples", c.pow_samples);
  read_field(j, seen, "bootstrap_log_factor", c.bootstrap_log_factor);
  read_field(j, seen, "link_sweep_passes", c.link_sweep_passes);
  read_field(j, seen, "beta_over_3", c.beta_over_3);
  read_field(j, seen, "dump_graph", c.dump_graph);
  read_field(j, seen, "gossip_trace", c.gossip_trace);
  read_field(j, seen, "seed_begin", c.seed_begin);
  read_field(j, seen, "seed_end", c.seed_end);
  read_field(j, seen, "threads", c.threads);
  read_field(j, seen, "out_dir", c.out_dir);

  for (auto it = j.begin(); it != j.end(); ++it) {
    if (seen.find(it.key()) == seen.end()) {
      throw std::invalid_argument("config: unknown key \"" + it.key() + "\"");
    }
  }
  c.validate();
  return c;
}

SimConfig SimConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

std::string SimConfig::to_json_text() const {
  json j;
  j["experiment"] = experiment_name(experiment);
  j["n"] = n;
  j["beta"] = beta;
  j["delta"] = delta;
  j["delta2"] = delta2;
  j["d1"] = d1;
  j["d2"] = d2;
  j["k"] = k;
  j["T"] = T;
  j["epochs"] = epochs;
  j["c0"] = c0;
  j["d0"] = d0;
  j["b"] = b;
  j["ell"] = ell;
  j["tau_rate"] = tau_rate;
  j["epsilon"] = epsilon;
  j["p_f"] = p_f;
  j["initial_red_fraction"] = initial_red_fraction;
  j["all_blue_initial"] = all_blue_initial;
  j["churn_fraction"] = churn_fraction;
  j["adversary"] = adversary;
  j["adv_spam_factor"] = adv_spam_factor;
  j["trials"] = trials;
  j["pow_units_n"] = pow_units_n;
  j["pow_samples"] = pow_samples;
  j["bootstrap_log_factor"] = bootstrap_log_factor;
  j["link_sweep_passes"] = link_sweep_passes;
  j["beta_over_3"] = beta_over_3;
  j["dump_graph"] = dump_graph;
  j["gossip_trace"] = gossip_trace;
  j["seed_begin"] = seed_begin;
  j["seed_end"] = seed_end;
  j["threads"] = threads;
  j["out_dir"] = out_dir;
  return j.dump(2);
}

}  // namespace tinygroups
