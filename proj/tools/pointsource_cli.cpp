#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "pointsource/pointsource.hpp"

namespace {

int run_command(const std::string& experiment, const std::string& methods, int iters, long long seed, int threads,
                const std::string& out, const std::string& config_path, bool quiet) {
  ps::ExperimentSpec spec;
  if (!config_path.empty()) {
    spec = ps::ExperimentSpec::from_config(ps::ConfigFile::load(config_path));
  } else {
    spec = ps::ExperimentSpec::defaults(ps::parse_experiment_kind(experiment));
  }
  const ps::ExperimentKind kind = spec.params.kind;
  if (!methods.empty()) spec.roster = ps::ExperimentSpec::parse_roster(methods, kind);
  if (iters >= 0) spec.iterations = iters;
  if (seed >= 0) spec.params.seed = static_cast<std::uint64_t>(seed);
  if (threads > 0) spec.threads = threads;
  spec.validate();

  std::cerr << "experiment " << ps::to_string(kind) << ", seed " << spec.params.seed << ", " << spec.iterations
            << " iterations, " << spec.threads << " thread(s)\n";
  const auto art = ps::run_experiment(spec, out, quiet ? nullptr : &std::cerr);
  std::cerr << "wrote " << art.files.size() << " files to " << art.dir.string() << "\n";
  if (art.failures > 0) std::cerr << art.failures << " of " << art.methods << " methods failed\n";
  return art.all_failed() ? 1 : 0;
}

int check_command(const std::string& suite, int iters, const std::string& scratch) {
  ps::SuiteOptions opt;
  opt.iterations = iters;
  opt.scratch = scratch;
  opt.log = &std::cerr;
  int failed = 0;
  auto sink = [&](const ps::CheckResult& r) {
    std::cout << ps::format_check(r) << std::endl;
    failed += !r.passed;
  };
  if (suite == "acceptance")
    ps::run_acceptance(opt, sink);
  else
    ps::run_properties(opt, sink);
  std::cout << (failed == 0 ? "all checks passed" : std::to_string(failed) + " check(s) failed") << std::endl;
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse point-source reconstruction with sliding forward-backward methods"};
  app.require_subcommand(1);

  std::string experiment = "fast1d", methods, out = "results", config;
  int iters = -1, threads = 0;
  long long seed = -1;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Run one experiment and write CSV, SVG and metadata artifacts");
  run->add_option("--experiment", experiment, "fast1d | fast2d | biased1d | biased2d")
      ->check(CLI::IsMember({"fast1d", "fast2d", "biased1d", "biased2d"}));
  run->add_option("--method", methods, "method name, comma-separated list, or 'all' (default roster)");
  run->add_option("--iters", iters, "iteration cap (default 4000)")->check(CLI::NonNegativeNumber);
  run->add_option("--seed", seed, "data seed (default 0)")->check(CLI::NonNegativeNumber);
  run->add_option("--threads", threads, "worker threads inside each method")->check(CLI::PositiveNumber);
  run->add_option("--out", out, "output directory");
  run->add_option("--config", config, "configuration file; command-line options override it")
      ->check(CLI::ExistingFile);
  run->add_flag("--quiet", quiet, "suppress per-method progress");

  std::string suite = "properties", scratch;
  int check_iters = 4000;
  auto* check = app.add_subcommand("check", "Run an invariant suite and print one line per check");
  check->add_option("--suite", suite, "properties | acceptance")->check(CLI::IsMember({"properties", "acceptance"}));
  check->add_option("--iters", check_iters, "iterations of the shared fast1d run (acceptance)")
      ->check(CLI::PositiveNumber);
  check->add_option("--scratch", scratch, "directory for temporary run artifacts");

  CLI11_PARSE(app, argc, argv);
  try {
    if (run->parsed()) return run_command(experiment, methods, iters, seed, threads, out, config, quiet);
    return check_command(suite, check_iters, scratch);
  } catch (const ps::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
