#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pointsource/harness/run.hpp"

using namespace ps;
namespace fs = std::filesystem;

TEST(LogSampling, FirstHundredAndTwenty) {
  std::vector<int> got;
  for (int k = 0; k <= 120; ++k)
    if (is_log_sampled(k)) got.push_back(k);
  const std::vector<int> expect{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  EXPECT_EQ(got, expect);
  EXPECT_TRUE(is_log_sampled(4000));
  EXPECT_TRUE(is_log_sampled(900));
  EXPECT_FALSE(is_log_sampled(110));
  EXPECT_FALSE(is_log_sampled(-1));
}

TEST(RelativeError, SharedMinimumAcrossSeries) {
  const auto r = compute_relative_error({{10, 6, 4}, {10, 2, 3}});
  EXPECT_EQ(r.v0, 10);
  EXPECT_EQ(r.v_min, 2);
  EXPECT_FALSE(r.degenerate);
  EXPECT_EQ(r.series[0], (std::vector<double>{1.0, 0.5, 0.25}));
  EXPECT_EQ(r.series[1], (std::vector<double>{1.0, 0.0, 0.125}));
  EXPECT_THROW(compute_relative_error({{1, 0}, {2, 0}}), std::invalid_argument);
  const auto d = compute_relative_error({{3, 3}});
  EXPECT_TRUE(d.degenerate);
  EXPECT_EQ(d.series[0], (std::vector<double>{0.0, 0.0}));
}

TEST(ConfigFile, ParsesTypedValues) {
  const auto c = ConfigFile::parse_string(R"(
# comment
top = 1
[experiment]
kind = "fast2d"   # trailing comment
iterations = 250
flag = true
[method.sFB]
theta0 = 0.5e0
)");
  EXPECT_EQ(c.get_int("", "top", 0), 1);
  EXPECT_EQ(c.get_string("experiment", "kind", ""), "fast2d");
  EXPECT_EQ(c.get_int("experiment", "iterations", 0), 250);
  EXPECT_TRUE(c.get_bool("experiment", "flag", false));
  EXPECT_DOUBLE_EQ(c.get_double("method.sFB", "theta0", 0), 0.5);
  EXPECT_EQ(c.get_int("experiment", "missing", 7), 7);
  EXPECT_THROW(c.get_double("experiment", "kind", 0), ConfigError);
  EXPECT_THROW(c.get_bool("experiment", "iterations", false), ConfigError);
}

TEST(ConfigFile, ReportsMalformedLines) {
  for (const char* bad : {"[open", "novalue", "k = ", "= 3", "s = \"unterminated", "[]"}) {
    EXPECT_THROW(ConfigFile::parse_string(bad), ConfigError) << bad;
  }
  try {
    ConfigFile::parse_string("a = 1\nbroken\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos);
  }
  EXPECT_THROW(ConfigFile::load("/nonexistent/x.toml"), ConfigError);
}

TEST(ExperimentSpec, ConfigRoundTrip) {
  auto s = ExperimentSpec::defaults(ExperimentKind::Biased1D);
  s.iterations = 123;
  s.params.seed = 9;
  s.params.lambda = 0.03;
  s.roster = {Method::FPDPS, Method::SPDPS};
  s.steps[Method::SPDPS].theta0 = 0.4;
  s.steps[Method::SPDPS].merge = MergePolicy::move_mass(0.02);
  const auto text = s.to_config().dump();
  const auto t = ExperimentSpec::from_config(ConfigFile::parse_string(text));
  EXPECT_EQ(t.params.kind, ExperimentKind::Biased1D);
  EXPECT_EQ(t.iterations, 123);
  EXPECT_EQ(t.params.seed, 9u);
  EXPECT_DOUBLE_EQ(t.params.lambda, 0.03);
  EXPECT_EQ(t.roster, s.roster);
  EXPECT_DOUBLE_EQ(t.config_for(Method::SPDPS).theta0, 0.4);
  EXPECT_EQ(t.config_for(Method::SPDPS).merge.str(), "m:0.02");
  EXPECT_EQ(t.to_config().dump(), text);
}

TEST(ExperimentSpec, RejectsInapplicableMethods) {
  EXPECT_THROW(ExperimentSpec::from_config(ConfigFile::parse_string("[experiment]\nkind = \"fast1d\"\nmethods = \"sPDPS\"\n")),
               std::invalid_argument);
  EXPECT_THROW(ExperimentSpec::parse_roster("sFB,nope", ExperimentKind::Fast1D), std::invalid_argument);
  EXPECT_EQ(ExperimentSpec::parse_roster("sFB, muFB", ExperimentKind::Fast1D),
            (std::vector<Method>{Method::SFB, Method::MuFB}));
  EXPECT_EQ(ExperimentSpec::parse_roster("all", ExperimentKind::Biased2D), default_roster(ExperimentKind::Biased2D));
  auto s = ExperimentSpec::defaults(ExperimentKind::Fast1D);
  s.threads = 0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(Svg, RendersSeriesAndSkipsNonPositiveOnLogAxes) {
  const std::string svg = render_svg({"a < b", "x", "y", true, true, 400, 300},
                                     {{"s&1", {1, 10, 100}, {1, 0.1, 0.0}}, {"empty", {}, {}}});
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(svg.find("a &lt; b"), std::string::npos);
  EXPECT_NE(svg.find("s&amp;1"), std::string::npos);
  EXPECT_NE(svg.find("<polyline"), std::string::npos);
}

TEST(RunExperiment, WritesArtifacts) {
  auto s = ExperimentSpec::defaults(ExperimentKind::Fast1D);
  s.iterations = 12;
  s.roster = {Method::SFB, Method::FWf};
  const fs::path dir = fs::temp_directory_path() / "pointsource_test_run";
  fs::remove_all(dir);
  const auto art = run_experiment(s, dir);
  EXPECT_EQ(art.methods, 2);
  EXPECT_EQ(art.failures, 0);
  for (const char* f : {"config.toml", "truth.csv", "observation.csv", "sFB_iterations.csv", "sFB_timing.csv",
                        "sFB_reconstruction.csv", "FWf_iterations.csv", "relative_error_vs_iteration.svg",
                        "relative_error_vs_cpu.svg", "spikes_vs_iteration.svg", "metadata.json"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  std::ifstream csv(dir / "sFB_iterations.csv");
  std::string line;
  std::vector<int> ks;
  std::getline(csv, line);
  EXPECT_EQ(line.rfind("k,value,rel_error,", 0), 0u);
  while (std::getline(csv, line)) ks.push_back(std::stoi(line.substr(0, line.find(','))));
  EXPECT_EQ(ks, (std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10}));
  std::ifstream mj(dir / "metadata.json");
  const auto meta = nlohmann::json::parse(mj);
  EXPECT_EQ(meta["experiment"]["kind"], "fast1d");
  EXPECT_EQ(meta["methods"].size(), 2u);
  EXPECT_EQ(meta["methods"][0]["name"], "sFB");
  EXPECT_GT(meta["constants"]["L"].get<double>(), 0.0);
  // The written config reproduces the run settings.
  const auto back = ExperimentSpec::from_config(ConfigFile::load((dir / "config.toml").string()));
  EXPECT_EQ(back.roster, s.roster);
  EXPECT_EQ(back.iterations, 12);
  fs::remove_all(dir);
}
