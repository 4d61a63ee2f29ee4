#pragma once

#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pointsource/algorithms/config.hpp"
#include "pointsource/harness/config_file.hpp"
#include "pointsource/model/experiment.hpp"

namespace ps {

/// Everything needed to reproduce one experiment run.
struct ExperimentSpec {
  ExperimentParams params;
  std::vector<Method> roster;
  std::map<Method, StepConfig> steps;
  int iterations = 4000;
  int threads = 1;
  int L_resolution = 1000;  ///< sample count of the randomised estimate of L
  std::uint64_t L_seed = 7;

  static ExperimentSpec defaults(ExperimentKind kind) {
    ExperimentSpec s;
    s.params = ExperimentParams::defaults(kind);
    s.roster = default_roster(kind);
    for (Method m : all_methods())
      if (method_biased(m) == experiment_biased(kind)) s.steps[m] = StepConfig::defaults(m, kind);
    return s;
  }

  static const std::vector<Method>& all_methods() {
    static const std::vector<Method> all{Method::MuFB,  Method::MuPDPS, Method::FWf,        Method::SFB,
                                         Method::RadonFB, Method::RadonSFB, Method::SPDPS, Method::FPDPS,
                                         Method::RadonSPDPS, Method::RadonFPDPS};
    return all;
  }

  const StepConfig& config_for(Method m) const {
    auto it = steps.find(m);
    if (it == steps.end()) throw std::invalid_argument("no step configuration for " + to_string(m));
    return it->second;
  }

  /// Throws std::invalid_argument when a roster method does not fit the experiment kind.
  void validate() const {
    if (iterations < 0) throw std::invalid_argument("iteration cap must be nonnegative");
    if (threads < 1) throw std::invalid_argument("thread count must be positive");
    if (roster.empty()) throw std::invalid_argument("empty method roster");
    for (Method m : roster)
      if (method_biased(m) != experiment_biased(params.kind))
        throw std::invalid_argument("method " + to_string(m) + " is not applicable to " + to_string(params.kind));
    if (!(params.alpha > 0)) throw std::invalid_argument("alpha must be positive");
    if (experiment_biased(params.kind) && !(params.lambda > 0))
      throw std::invalid_argument("lambda must be positive for biased experiments");
  }

  /// Parses "all" or a comma-separated list of method names.
  static std::vector<Method> parse_roster(const std::string& text, ExperimentKind kind) {
    if (text == "all") return default_roster(kind);
    std::vector<Method> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto a = item.find_first_not_of(' ');
      const auto b = item.find_last_not_of(' ');
      if (a == std::string::npos) continue;
      out.push_back(parse_method(item.substr(a, b - a + 1)));
    }
    return out;
  }

  ConfigFile to_config() const {
    ConfigFile c;
    c.set("experiment", "kind", to_string(params.kind));
    c.set("experiment", "seed", static_cast<long long>(params.seed));
    c.set("experiment", "iterations", iterations);
    c.set("experiment", "threads", threads);
    std::string r;
    for (Method m : roster) r += (r.empty() ? "" : ",") + to_string(m);
    c.set("experiment", "methods", r);
    c.set("problem", "alpha", params.alpha);
    c.set("problem", "lambda", params.lambda);
    c.set("problem", "noise_std", params.noise_std);
    c.set("problem", "sensors_per_axis", params.sensors_per_axis);
    c.set("problem", "spread_width", params.spread_width);
    c.set("constants", "L_resolution", L_resolution);
    c.set("constants", "L_seed", static_cast<long long>(L_seed));
    for (const auto& [m, s] : steps) {
      const std::string sec = "method." + to_string(m);
      c.set(sec, "tau0", s.tau0);
      c.set(sec, "theta0", s.theta0);
      c.set(sec, "sigma0", s.sigma0);
      c.set(sec, "sigma_p0", s.sigma_p0);
      c.set(sec, "sigma_d0", s.sigma_d0);
      c.set(sec, "kappa", s.kappa);
      c.set(sec, "c_con", s.c_con);
      c.set(sec, "tighten_c", s.tighten_c);
      c.set(sec, "ell_r", s.ell_r);
      c.set(sec, "merge", s.merge.str());
      c.set(sec, "bootstrap", s.bootstrap);
    }
    return c;
  }

  /// Starts from the defaults of the configured kind and applies every key present.
  static ExperimentSpec from_config(const ConfigFile& c) {
    const ExperimentKind kind = parse_experiment_kind(c.get_string("experiment", "kind", "fast1d"));
    ExperimentSpec s = defaults(kind);
    s.params.seed = static_cast<std::uint64_t>(c.get_int("experiment", "seed", static_cast<long long>(s.params.seed)));
    s.iterations = static_cast<int>(c.get_int("experiment", "iterations", s.iterations));
    s.threads = static_cast<int>(c.get_int("experiment", "threads", s.threads));
    if (c.has("experiment", "methods")) s.roster = parse_roster(c.get_string("experiment", "methods", "all"), kind);
    s.params.alpha = c.get_double("problem", "alpha", s.params.alpha);
    s.params.lambda = c.get_double("problem", "lambda", s.params.lambda);
    s.params.noise_std = c.get_double("problem", "noise_std", s.params.noise_std);
    s.params.sensors_per_axis = static_cast<int>(c.get_int("problem", "sensors_per_axis", s.params.sensors_per_axis));
    s.params.spread_width = c.get_double("problem", "spread_width", s.params.spread_width);
    s.L_resolution = static_cast<int>(c.get_int("constants", "L_resolution", s.L_resolution));
    s.L_seed = static_cast<std::uint64_t>(c.get_int("constants", "L_seed", static_cast<long long>(s.L_seed)));
    for (const auto& sec : c.sections()) {
      if (sec.name.rfind("method.", 0) != 0) continue;
      const Method m = parse_method(sec.name.substr(7));
      StepConfig& st = s.steps[m];
      const std::string& n = sec.name;
      st.tau0 = c.get_double(n, "tau0", st.tau0);
      st.theta0 = c.get_double(n, "theta0", st.theta0);
      st.sigma0 = c.get_double(n, "sigma0", st.sigma0);
      st.sigma_p0 = c.get_double(n, "sigma_p0", st.sigma_p0);
      st.sigma_d0 = c.get_double(n, "sigma_d0", st.sigma_d0);
      st.kappa = c.get_double(n, "kappa", st.kappa);
      st.c_con = c.get_double(n, "c_con", st.c_con);
      st.tighten_c = c.get_double(n, "tighten_c", st.tighten_c);
      st.ell_r = c.get_double(n, "ell_r", st.ell_r);
      if (c.has(n, "merge")) st.merge = MergePolicy::parse(c.get_string(n, "merge", "no"));
      st.bootstrap = static_cast<int>(c.get_int(n, "bootstrap", st.bootstrap));
    }
    s.validate();
    return s;
  }
};

}  // namespace ps
