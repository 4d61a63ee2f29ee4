#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "pointsource/algorithms/merge.hpp"
#include "pointsource/algorithms/solver.hpp"
#include "pointsource/algorithms/transport.hpp"
#include "pointsource/harness/oracles.hpp"
#include "pointsource/model/experiment.hpp"
#include "pointsource/util/rng.hpp"

using namespace ps;

TEST(Tolerance, ScheduleValues) {
  ToleranceSchedule t;
  EXPECT_DOUBLE_EQ(t(0), 0.5);
  EXPECT_NEAR(t(1), 0.38736132698952347, 1e-15);
  EXPECT_NEAR(t(5), 0.18946457081379978, 1e-15);
  EXPECT_NEAR(t(10), 0.10739900249620905, 1e-15);
  EXPECT_NEAR(t(100), 0.007044707922177716, 1e-15);
  t.base = 0.3;
  EXPECT_NEAR(t(5), 0.3 * 0.18946457081379978, 1e-15);
  for (int k = 0; k < 1000; ++k) EXPECT_GT(t(k), t(k + 1));
}

TEST(Steps, UnbiasedForwardBackward) {
  ModelConstants c;
  c.L = 0.1;
  c.L_radon = 0.5;
  const auto s = resolve_steps(Method::SFB, StepConfig::defaults(Method::SFB, ExperimentKind::Fast1D), c, 1);
  EXPECT_NEAR(s.tau, 9.9, 1e-12);
  EXPECT_DOUBLE_EQ(s.theta0, 0.9);
  EXPECT_TRUE(s.all_hold());
  const auto r = resolve_steps(Method::RadonFB, StepConfig::defaults(Method::RadonFB, ExperimentKind::Fast1D), c, 1);
  EXPECT_NEAR(r.tau, 1.98, 1e-12);
  EXPECT_DOUBLE_EQ(r.theta0, 0.0);
  const auto p = resolve_steps(Method::MuPDPS, StepConfig::defaults(Method::MuPDPS, ExperimentKind::Fast1D), c, 1);
  EXPECT_NEAR(p.tau * p.sigma * c.L, 0.99, 1e-12);
  EXPECT_TRUE(p.all_hold());
}

TEST(Steps, BiasedPrimalDualChoosesBetaFromFactor) {
  ModelConstants c;
  c.L = 0.1;
  c.L_radon = 0.5;
  for (int dim : {1, 2}) {
    const auto cfg = StepConfig::defaults(Method::SPDPS, dim == 1 ? ExperimentKind::Biased1D : ExperimentKind::Biased2D);
    const auto s = resolve_steps(Method::SPDPS, cfg, c, dim);
    // L₀ = 2L, L_z = 2, ‖∇_h‖² ≤ 4·dim; β = σ_pσ_d‖∇_h‖²/(1 − σ_pL_z) is set to σ_{d,0}.
    const double tau = 0.99 / 0.2, sp = 0.99 / 2.0, slack = 1.0 - sp * 2.0;
    const double sd = 0.05 * slack / (sp * 4.0 * dim);
    EXPECT_NEAR(s.tau, tau, 1e-12);
    EXPECT_NEAR(s.sigma_p, sp, 1e-15);
    EXPECT_NEAR(s.sigma_d, sd, 1e-15);
    EXPECT_NEAR(s.beta, 0.05, 1e-14);
    EXPECT_TRUE(s.all_hold());
    EXPECT_EQ(s.inequalities.size(), 7u);
  }
  auto bad = StepConfig::defaults(Method::FPDPS, ExperimentKind::Biased1D);
  bad.sigma_p0 = 1.0;
  EXPECT_THROW(resolve_steps(Method::FPDPS, bad, c, 1), InfeasibleConfig);
}

TEST(GridGradient, NormMatchesPathGraphSpectrum) {
  // ∇_hᵀ∇_h on a path of n nodes has largest eigenvalue 2 + 2cos(π/n). The Rayleigh quotient approaches
  // it from below; the spectral gap at the top is tiny, so convergence is slow.
  const GridGradient<1> g({100});
  const double exact = 2.0 + 2.0 * std::cos(std::numbers::pi / 100);
  EXPECT_LE(g.norm_sq_estimate(5000), exact + 1e-12);
  EXPECT_NEAR(g.norm_sq_estimate(5000), exact, 1e-5);
  const GridGradient<2> g2({16, 16});
  EXPECT_LE(g2.norm_sq_estimate(2000), 8.0);
  EXPECT_NEAR(g2.norm_sq_estimate(5000), 2.0 * (2.0 + 2.0 * std::cos(std::numbers::pi / 16)), 1e-4);
}

TEST(GridGradient, AdjointIdentity) {
  const GridGradient<2> g({5, 7});
  Rng rng(31);
  std::vector<double> z(g.size()), y(g.dual_size());
  for (auto& v : z) v = rng.normal();
  for (auto& v : y) v = rng.normal();
  const auto gz = g.apply(z), gty = g.adjoint(y);
  double a = 0.0, b = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) a += gz[i] * y[i];
  for (std::size_t i = 0; i < z.size(); ++i) b += z[i] * gty[i];
  EXPECT_NEAR(a, b, 1e-12);
}

TEST(Merge, InterpolateAndMoveMass) {
  DiscreteMeasure<1> mu(MeasureMode::Nonnegative);
  mu.add(Point<1>{0.5}, 1.0);
  mu.add(Point<1>{0.505}, 3.0);
  mu.add(Point<1>{0.8}, 2.0);
  auto flat = [](const DiscreteMeasure<1>&) { return 0.0; };
  MergeStats st;
  const auto a = merge_spikes<1>(mu, MergePolicy::interpolate(0.01), flat, 0.0, &st);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(st.accepted, 1);
  EXPECT_NEAR(a.weight_at(Point<1>{0.50375}, 1e-12), 4.0, 1e-15);
  const auto b = merge_spikes<1>(mu, MergePolicy::move_mass(0.01), flat, 0.0);
  EXPECT_NEAR(b.weight_at(Point<1>{0.505}, 0.0), 4.0, 1e-15);
  // A merge that raises the value beyond the gate is rejected.
  auto count = [](const DiscreteMeasure<1>& m) { return -static_cast<double>(m.size()); };
  const auto c = merge_spikes<1>(mu, MergePolicy::interpolate(0.01), count, 0.5, &st);
  EXPECT_EQ(c.size(), 3u);
  EXPECT_EQ(st.rejected, 1);
  EXPECT_EQ(merge_spikes<1>(mu, MergePolicy::none(), flat, 1.0).size(), 3u);
}

TEST(MergePolicy, ParseAndFormat) {
  EXPECT_EQ(MergePolicy::parse("no").kind, MergePolicy::Kind::None);
  EXPECT_EQ(MergePolicy::parse("i:0.01").str(), "i:0.01");
  EXPECT_EQ(MergePolicy::parse("m:0.02").kind, MergePolicy::Kind::MoveMass);
  EXPECT_THROW(MergePolicy::parse("x:1"), std::invalid_argument);
}

TEST(Transport, TransportedMeasureMovesMass) {
  DiscreteMeasure<1> mu(MeasureMode::Nonnegative);
  mu.add(Point<1>{0.2}, 1.0);
  mu.add(Point<1>{0.6}, 2.0);
  TransportPlan<1> g;
  g.add(Point<1>{0.2}, Point<1>{0.25}, 0.4);
  g.add(Point<1>{0.6}, Point<1>{0.55}, 2.0);
  const auto m = transported_measure<1>(mu, g, 1.0);
  EXPECT_EQ(m.size(), 3u);
  EXPECT_NEAR(m.weight_at(Point<1>{0.2}, 0.0), 0.6, 1e-15);
  EXPECT_NEAR(m.weight_at(Point<1>{0.25}, 0.0), 0.4, 1e-15);
  EXPECT_NEAR(m.weight_at(Point<1>{0.55}, 0.0), 2.0, 1e-15);
  EXPECT_EQ(m.weight_at(Point<1>{0.6}, 0.0), 0.0);
  EXPECT_NEAR(radon_norm(m), radon_norm(mu), 1e-15);
}

TEST(Transport, StepFollowsNegativeGradientAndClamps) {
  DiscreteMeasure<1> mu(MeasureMode::Nonnegative);
  mu.add(Point<1>{0.5}, 1.0);
  mu.add(Point<1>{0.99}, 1.0);
  const Domain<1> dom{{0.0}, {1.0}};
  const auto g = transport_step<1>(mu, [](const Point<1>&) { return Point<1>{-1.0}; }, 0.02, dom);
  ASSERT_EQ(g.size(), 2u);
  EXPECT_NEAR(g.atoms()[0].target[0], 0.52, 1e-15);
  EXPECT_EQ(g.atoms()[1].target[0], 1.0);
}

TEST(TVOracle, TwoBlockClosedForm) {
  // Each block of two moves λ/2 towards the other while the jump survives.
  const std::vector<double> y{0, 0, 1, 1};
  const auto z = oracle::tv_denoise_1d(y, 0.3);
  const std::vector<double> expect{0.15, 0.15, 0.85, 0.85};
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(z[i], expect[i], 1e-14);
  // A large λ flattens everything to the mean.
  for (double v : oracle::tv_denoise_1d(y, 5.0)) EXPECT_NEAR(v, 0.5, 1e-14);
}

TEST(TVOracle, DirectMethodAgreesWithPrimalDual) {
  Rng rng(32);
  const GridGradient<1> G({60});
  std::vector<double> y(60);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = (i < 25 ? 1.0 : -0.5) + 0.3 * rng.normal();
  const auto zc = oracle::tv_denoise_1d(y, 0.4);
  const auto zp = oracle::tv_denoise_cp<1>(G, y, 0.4, 50000);
  const double fc = oracle::tv_objective<1>(G, zc, y, 0.4), fp = oracle::tv_objective<1>(G, zp, y, 0.4);
  EXPECT_LE(fc, fp + 1e-12);
  EXPECT_NEAR(fc, fp, 1e-8);
}

namespace {

struct Fast1D {
  Experiment<1> ex = generate_experiment<1>(ExperimentParams::defaults(ExperimentKind::Fast1D));
  ModelConstants c = ex.model.constants(estimate_L(ex.model, 1000, 7));
  Problem<1> problem{&ex.model, ex.obs.b, ex.params.alpha, 0.0, false};
};

}  // namespace

TEST(Solver, DeterministicAcrossWorkerCounts) {
  const Fast1D f;
  for (Method m : {Method::SFB, Method::MuFB, Method::FWf}) {
    const auto cfg = StepConfig::defaults(m, ExperimentKind::Fast1D);
    Solver<1> a(f.problem, m, cfg, f.c);
    WorkerPool pool(4);
    Solver<1> b(f.problem, m, cfg, f.c, &pool);
    for (int k = 0; k < 25; ++k) {
      const auto ra = a.step(), rb = b.step();
      ASSERT_EQ(ra.value, rb.value) << to_string(m) << " k = " << ra.k;
    }
    ASSERT_EQ(a.state().mu.size(), b.state().mu.size());
    for (std::size_t i = 0; i < a.state().mu.size(); ++i) {
      EXPECT_EQ(a.state().mu[i].x, b.state().mu[i].x);
      EXPECT_EQ(a.state().mu[i].w, b.state().mu[i].w);
    }
  }
}

TEST(Solver, IteratesStayNonnegativeAndDecreaseFromZero) {
  const Fast1D f;
  for (Method m : default_roster(ExperimentKind::Fast1D)) {
    Solver<1> s(f.problem, m, StepConfig::defaults(m, ExperimentKind::Fast1D), f.c);
    const double v0 = s.value();
    EXPECT_NEAR(v0, 0.5 * std::pow(norm2(f.ex.obs.b), 2), 1e-9 * v0);
    for (int k = 0; k < 30; ++k) {
      s.step();
      for (const auto& sp : s.state().mu.spikes()) ASSERT_GE(sp.w, 0.0) << to_string(m);
    }
    EXPECT_LT(s.value(), v0) << to_string(m);
  }
}

TEST(Solver, RejectsMethodOfOtherProblemType) {
  const Fast1D f;
  EXPECT_THROW(Solver<1>(f.problem, Method::SPDPS, StepConfig::defaults(Method::SPDPS, ExperimentKind::Biased1D), f.c),
               std::invalid_argument);
}

TEST(Solver, FrozenBiasedRunSolvesTVDenoising) {
  auto params = ExperimentParams::defaults(ExperimentKind::Biased1D);
  const auto ex = generate_experiment<1>(params);
  const auto c = ex.model.constants(estimate_L(ex.model, 1000, 7));
  const Problem<1> p{&ex.model, ex.obs.b, params.alpha, params.lambda, true};
  // With μ frozen at zero the z-update is a primal-dual method for min ½‖z − b‖² + λ‖∇_h z‖.
  auto cfg = StepConfig::defaults(Method::FPDPS, ExperimentKind::Biased1D);
  cfg.sigma_d0 = 0.5;
  Solver<1> s(p, Method::FPDPS, cfg, c);
  s.freeze_measure(true);
  double prev = s.value();
  for (int k = 0; k < 3000; ++k) s.step();
  EXPECT_LT(s.value(), prev);
  EXPECT_TRUE(s.state().mu.empty());
  const GridGradient<1> G({params.sensors_per_axis});
  const double opt = oracle::tv_objective<1>(G, oracle::tv_denoise_1d(ex.obs.b, params.lambda), ex.obs.b, params.lambda);
  EXPECT_GE(s.value(), opt - 1e-12);
  EXPECT_NEAR(s.value(), opt, 1e-6 * (1.0 + opt));
}
