#pragma once

#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pointsource/algorithms/solver.hpp"
#include "pointsource/harness/spec.hpp"
#include "pointsource/harness/svg_plot.hpp"
#include "pointsource/model/experiment.hpp"
#include "pointsource/util/parallel.hpp"

namespace ps {

/// Logged iterations: 0 and every d·10ᵖ with d ∈ 1..9.
inline bool is_log_sampled(int k) {
  if (k <= 0) return k == 0;
  while (k % 10 == 0) k /= 10;
  return k < 10;
}

struct RelativeError {
  std::vector<std::vector<double>> series;
  double v0 = 0.0;
  double v_min = 0.0;
  bool degenerate = false;  ///< v(x⁰) = v(x_min): every entry is reported as 0
};

/// eᵏ = (v(xᵏ) − v_min)/(v(x⁰) − v_min) with v_min the minimum over all series.
inline RelativeError compute_relative_error(const std::vector<std::vector<double>>& values) {
  RelativeError r;
  bool have_v0 = false;
  r.v_min = std::numeric_limits<double>::infinity();
  for (const auto& s : values) {
    if (s.empty()) continue;
    if (!have_v0) {
      r.v0 = s.front();
      have_v0 = true;
    } else if (std::abs(s.front() - r.v0) > 1e-12 * (1.0 + std::abs(r.v0))) {
      throw std::invalid_argument("relative error: series do not share the initial value");
    }
    for (double v : s) r.v_min = std::min(r.v_min, v);
  }
  const double den = r.v0 - r.v_min;
  r.degenerate = !(den > 0);
  for (const auto& s : values) {
    std::vector<double> e(s.size(), 0.0);
    if (!r.degenerate)
      for (std::size_t k = 0; k < s.size(); ++k) e[k] = (s[k] - r.v_min) / den;
    r.series.push_back(std::move(e));
  }
  return r;
}

template <int Dim>
struct MethodRun {
  Method method = Method::MuFB;
  StepConfig config;
  ResolvedSteps steps;
  std::vector<double> values;             ///< v(xᵏ) for k = 0..K
  std::vector<IterationRecord> records;   ///< records[k−1] belongs to iteration k
  DiscreteMeasure<Dim> final_measure;     ///< after the clean-up merge
  std::vector<double> background;         ///< z at exit (biased problems)
  double final_value = 0.0;               ///< objective before the clean-up merge
  double cleaned_value = 0.0;
  int cleanup_merges = 0;
  bool failed = false;
  std::string error;
};

template <int Dim>
struct ExperimentRun {
  ExperimentSpec spec;
  Experiment<Dim> experiment;
  ModelConstants constants;
  std::vector<MethodRun<Dim>> runs;
  RelativeError rel;
};

template <int Dim>
using SolverHook = std::function<void(Method, Solver<Dim>&)>;

/// Runs every roster method on one shared observation, one method at a time.
/// A failing method is recorded and does not stop the others.
template <int Dim>
ExperimentRun<Dim> execute_experiment(const ExperimentSpec& spec, const SolverHook<Dim>& hook = {},
                                      std::ostream* log = nullptr) {
  spec.validate();
  if (experiment_dim(spec.params.kind) != Dim) throw std::invalid_argument("execute_experiment: dimension mismatch");
  ExperimentRun<Dim> out{spec, generate_experiment<Dim>(spec.params), {}, {}, {}};
  const auto& ex = out.experiment;
  out.constants = ex.model.constants(estimate_L(ex.model, spec.L_resolution, spec.L_seed));
  std::unique_ptr<WorkerPool> pool;
  if (spec.threads > 1) pool = std::make_unique<WorkerPool>(spec.threads);
  const Problem<Dim> problem{&ex.model, ex.obs.b, spec.params.alpha, spec.params.lambda,
                             experiment_biased(spec.params.kind)};

  for (Method m : spec.roster) {
    MethodRun<Dim> run;
    run.method = m;
    run.config = spec.config_for(m);
    try {
      Solver<Dim> solver(problem, m, run.config, out.constants, pool.get());
      run.steps = solver.steps();
      if (hook) hook(m, solver);
      run.values.push_back(solver.value());
      for (int k = 0; k < spec.iterations; ++k) {
        run.records.push_back(solver.step());
        run.values.push_back(run.records.back().value);
      }
      run.final_value = solver.value();
      run.cleanup_merges = solver.cleanup();
      run.cleaned_value = solver.value();
      run.final_measure = solver.state().mu;
      run.background = solver.state().z;
    } catch (const std::exception& e) {
      run.failed = true;
      run.error = e.what();
    }
    if (log) {
      if (run.failed)
        *log << to_string(m) << ": failed after " << run.records.size() << " iterations: " << run.error << "\n";
      else
        *log << to_string(m) << ": v = " << ConfigFile::format_number(run.final_value) << ", "
             << run.final_measure.size() << " spikes, "
             << (run.records.empty() ? 0.0 : run.records.back().cpu) << " s CPU\n";
    }
    out.runs.push_back(std::move(run));
  }
  std::vector<std::vector<double>> values;
  for (const auto& r : out.runs)
    if (!r.values.empty()) values.push_back(r.values);
  out.rel = compute_relative_error(values);
  return out;
}

struct RunArtifacts {
  std::filesystem::path dir;
  std::vector<std::filesystem::path> files;
  int methods = 0;
  int failures = 0;
  bool all_failed() const { return methods > 0 && failures == methods; }
};

namespace detail {

inline std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  return f;
}

}  // namespace detail

/// Iteration CSV rows for the log-sampled iterations. No timing columns, so identical seeds and
/// configurations give byte-identical files for any thread count.
template <int Dim>
void write_iteration_csv(std::ostream& os, const MethodRun<Dim>& run, const std::vector<double>& rel) {
  using detail::csv_num;
  os << "k,value,rel_error,spikes,inner_iterations,insertions,inner_loops,gamma_norm,curvature_retries,"
        "convexity_retries,support_drops,inner_budget_exceeded,eps,eps_bar,theta,ell_F,c_check,delta_v,certified,"
        "merges\n";
  if (!run.values.empty()) os << "0," << csv_num(run.values[0]) << ',' << csv_num(rel.empty() ? 1.0 : rel[0])
                              << ",0,0,0,0,0,0,0,0,0,0,0,0,0,nan,0,1,0\n";
  for (const auto& r : run.records) {
    if (!is_log_sampled(r.k)) continue;
    const double e = static_cast<std::size_t>(r.k) < rel.size() ? rel[r.k] : std::numeric_limits<double>::quiet_NaN();
    os << r.k << ',' << csv_num(r.value) << ',' << csv_num(e) << ',' << r.spikes << ',' << r.inner_iterations << ','
       << r.insertions << ',' << r.inner_loops << ',' << csv_num(r.gamma_norm) << ',' << r.curvature_retries << ','
       << r.convexity_retries << ',' << r.support_drops << ',' << (r.inner_budget_exceeded ? 1 : 0) << ','
       << csv_num(r.eps) << ',' << csv_num(r.eps_bar) << ',' << csv_num(r.theta) << ',' << csv_num(r.ell_F) << ','
       << csv_num(r.c_check) << ',' << csv_num(r.delta_v) << ',' << (r.certified ? 1 : 0) << ',' << r.merges << '\n';
  }
}

template <int Dim>
void write_timing_csv(std::ostream& os, const MethodRun<Dim>& run) {
  os << "k,cpu_seconds,wall_seconds\n";
  if (!run.values.empty()) os << "0,0,0\n";
  for (const auto& r : run.records)
    if (is_log_sampled(r.k)) os << r.k << ',' << detail::csv_num(r.cpu) << ',' << detail::csv_num(r.wall) << '\n';
}

template <int Dim>
nlohmann::json run_metadata(const ExperimentRun<Dim>& run) {
  using nlohmann::json;
  const auto& ex = run.experiment;
  const auto& c = run.constants;
  json meta;
  meta["experiment"] = {{"kind", to_string(ex.params.kind)},
                        {"seed", ex.params.seed},
                        {"alpha", ex.params.alpha},
                        {"lambda", ex.params.lambda},
                        {"noise_std", ex.params.noise_std},
                        {"sensors", ex.model.sensors()},
                        {"snr_db", ex.obs.snr_db},
                        {"iterations", run.spec.iterations},
                        {"threads", run.spec.threads}};
  meta["constants"] = {{"L", c.L},         {"L_pairing", c.L_pairing}, {"L_radon", c.L_radon},
                       {"N_psi", c.N_psi}, {"L_psi", c.L_psi},         {"L_grad_psi", c.L_grad_psi},
                       {"M_psi", c.M_psi}, {"Theta_F", c.Theta_F}};
  meta["relative_error"] = {{"v0", run.rel.v0}, {"v_min", run.rel.v_min}, {"degenerate", run.rel.degenerate}};
  json methods = json::array();
  for (const auto& r : run.runs) {
    json m;
    m["name"] = to_string(r.method);
    m["experimental"] = method_experimental(r.method);
    m["failed"] = r.failed;
    if (r.failed) m["error"] = r.error;
    m["iterations"] = r.records.size();
    m["final_value"] = r.final_value;
    m["value_after_cleanup"] = r.cleaned_value;
    m["cleanup_merges"] = r.cleanup_merges;
    m["spikes"] = r.final_measure.size();
    m["config"] = {{"tau0", r.config.tau0},         {"theta0", r.config.theta0},     {"sigma0", r.config.sigma0},
                   {"sigma_p0", r.config.sigma_p0}, {"sigma_d0", r.config.sigma_d0}, {"kappa", r.config.kappa},
                   {"c_con", r.config.c_con},       {"tighten_c", r.config.tighten_c}, {"ell_r", r.config.ell_r},
                   {"merge", r.config.merge.str()}, {"bootstrap", r.config.bootstrap}};
    m["steps"] = {{"tau", r.steps.tau},         {"theta0", r.steps.theta0},   {"sigma", r.steps.sigma},
                  {"sigma_p", r.steps.sigma_p}, {"sigma_d", r.steps.sigma_d}, {"L_smooth", r.steps.L_smooth},
                  {"L_z", r.steps.L_z},         {"beta", r.steps.beta},       {"grad_norm_sq", r.steps.grad_norm_sq}};
    json ineq = json::array();
    for (const auto& q : r.steps.inequalities)
      ineq.push_back({{"name", q.name}, {"lhs", q.lhs}, {"rhs", q.rhs}, {"strict", q.strict}, {"holds", q.holds()}});
    m["inequalities"] = ineq;
    methods.push_back(m);
  }
  meta["methods"] = methods;
  return meta;
}

/// Writes CSVs, SVG plots and metadata for an executed run.
template <int Dim>
RunArtifacts write_artifacts(const ExperimentRun<Dim>& run, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  RunArtifacts art;
  art.dir = dir;
  auto add = [&](const fs::path& p) {
    art.files.push_back(p);
    return detail::open_out(p);
  };
  {
    auto f = add(dir / "config.toml");
    f << run.spec.to_config().dump();
  }
  {
    auto f = add(dir / "truth.csv");
    write_measure_csv<Dim>(f, run.experiment.truth);
  }
  {
    auto f = add(dir / "observation.csv");
    const auto& ex = run.experiment;
    for (int a = 0; a < Dim; ++a) f << "x" << (a + 1) << ",";
    f << "b,clean" << (ex.bias.empty() ? "" : ",bias") << "\n";
    for (std::size_t i = 0; i < ex.obs.b.size(); ++i) {
      const auto c = ex.model.grid().center(i);
      for (int a = 0; a < Dim; ++a) f << detail::csv_num(c[a]) << ',';
      f << detail::csv_num(ex.obs.b[i]) << ',' << detail::csv_num(ex.obs.clean[i]);
      if (!ex.bias.empty()) f << ',' << detail::csv_num(ex.bias[i]);
      f << '\n';
    }
  }
  std::size_t vi = 0;
  std::vector<PlotSeries> by_iter, by_cpu, spikes;
  for (const auto& r : run.runs) {
    ++art.methods;
    if (r.failed) ++art.failures;
    const std::string name = to_string(r.method);
    static const std::vector<double> none;
    const std::vector<double>& rel = r.values.empty() ? none : run.rel.series[vi++];
    {
      auto f = add(dir / (name + "_iterations.csv"));
      write_iteration_csv<Dim>(f, r, rel);
    }
    {
      auto f = add(dir / (name + "_timing.csv"));
      write_timing_csv<Dim>(f, r);
    }
    if (!r.failed) {
      auto f = add(dir / (name + "_reconstruction.csv"));
      write_measure_csv<Dim>(f, r.final_measure);
      if (!r.background.empty()) {
        auto g = add(dir / (name + "_background.csv"));
        g << "index,z\n";
        for (std::size_t i = 0; i < r.background.size(); ++i) g << i << ',' << detail::csv_num(r.background[i]) << '\n';
      }
    }
    PlotSeries si{name, {}, {}}, sc{name, {}, {}}, ss{name, {}, {}};
    for (const auto& rec : r.records) {
      const double e = static_cast<std::size_t>(rec.k) < rel.size() ? rel[rec.k] : 0.0;
      si.x.push_back(rec.k);
      si.y.push_back(e);
      sc.x.push_back(rec.cpu);
      sc.y.push_back(e);
      ss.x.push_back(rec.k);
      ss.y.push_back(static_cast<double>(rec.spikes));
    }
    by_iter.push_back(std::move(si));
    by_cpu.push_back(std::move(sc));
    spikes.push_back(std::move(ss));
  }
  const std::string kind = to_string(run.experiment.params.kind);
  const auto p1 = dir / "relative_error_vs_iteration.svg";
  write_svg(p1.string(), {kind + ": relative error", "iteration", "relative error", true, true}, by_iter);
  const auto p2 = dir / "relative_error_vs_cpu.svg";
  write_svg(p2.string(), {kind + ": relative error", "CPU time (s)", "relative error", true, true}, by_cpu);
  const auto p3 = dir / "spikes_vs_iteration.svg";
  write_svg(p3.string(), {kind + ": spike count", "iteration", "spikes", true, false}, spikes);
  art.files.insert(art.files.end(), {p1, p2, p3});
  {
    auto f = add(dir / "metadata.json");
    f << run_metadata(run).dump(2) << '\n';
  }
  return art;
}

/// Executes an ExperimentSpec and writes all artifacts to dir.
inline RunArtifacts run_experiment(const ExperimentSpec& spec, const std::filesystem::path& dir,
                                   std::ostream* log = nullptr) {
  if (experiment_dim(spec.params.kind) == 1) return write_artifacts<1>(execute_experiment<1>(spec, {}, log), dir);
  return write_artifacts<2>(execute_experiment<2>(spec, {}, log), dir);
}

}  // namespace ps
