#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "pointsource/harness/oracles.hpp"
#include "pointsource/inner/bnb.hpp"
#include "pointsource/inner/weights.hpp"
#include "pointsource/model/experiment.hpp"
#include "pointsource/util/parallel.hpp"
#include "pointsource/util/rng.hpp"

using namespace ps;

TEST(WeightsD, TwoByTwoByHand) {
  // D = [[2,1],[1,2]], η = (−3,−3), reg 0: unconstrained minimiser D⁻¹·3 = (1,1) is feasible.
  WeightProblemD p;
  p.D.resize(2, 2);
  p.D << 2, 1, 1, 2;
  p.eta = Eigen::Vector2d(-3, -3);
  p.reg = 0.0;
  p.accuracy = 1e-12;
  auto r = solve_weights_D(p);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.beta[0], 1.0, 1e-12);
  EXPECT_NEAR(r.beta[1], 1.0, 1e-12);
  EXPECT_NEAR(r.objective, -3.0, 1e-12);
  // η = (−3, 2): the second coordinate is pushed to the bound, then β₀ = 3/2.
  p.eta = Eigen::Vector2d(-3, 2);
  r = solve_weights_D(p);
  EXPECT_NEAR(r.beta[0], 1.5, 1e-12);
  EXPECT_EQ(r.beta[1], 0.0);
  EXPECT_NEAR(r.objective, -2.25, 1e-12);
}

TEST(WeightsD, NonnegativeLinearTermGivesZero) {
  WeightProblemD p;
  p.D = Eigen::MatrixXd::Identity(3, 3);
  p.eta = Eigen::Vector3d(0.1, 0.0, 2.0);
  p.reg = 0.5;
  const auto r = solve_weights_D(p);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.beta.lpNorm<1>(), 0.0);
}

TEST(WeightsD, DuplicatePointsStillConverge) {
  // Two identical support points give a singular D; any split of the mass is optimal.
  WeightProblemD p;
  p.D = Eigen::MatrixXd::Ones(2, 2);
  p.eta = Eigen::Vector2d(-2, -2);
  p.reg = 0.5;
  p.accuracy = 1e-10;
  const auto r = solve_weights_D(p);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.beta.sum(), 1.5, 1e-9);
  EXPECT_NEAR(r.objective, -1.125, 1e-9);
}

TEST(WeightsD, MatchesProjectedGradientOracle) {
  Rng rng(21);
  for (int t = 0; t < 50; ++t) {
    const int n = 1 + static_cast<int>(rng.index(4));
    Eigen::MatrixXd G(n, n);
    for (int i = 0; i < n * n; ++i) G.data()[i] = rng.normal();
    WeightProblemD p;
    p.D = G * G.transpose() + 0.3 * Eigen::MatrixXd::Identity(n, n);
    p.eta.resize(n);
    for (int i = 0; i < n; ++i) p.eta[i] = rng.normal();
    p.reg = rng.uniform(0, 0.5);
    p.accuracy = 1e-12;
    const auto r = solve_weights_D(p);
    const auto b = oracle::weights_projected_gradient(p.D, p.eta, p.reg, 200000);
    EXPECT_NEAR(r.objective, objective_D(p, b), 1e-9);
  }
}

TEST(WeightsRadon, ScalarCaseByHand) {
  // min ½(β − 1)² + (η + reg)β over β ≥ 0 is β = max(0, 1 − η − reg).
  WeightProblemRadon p;
  p.alpha = Eigen::VectorXd::Constant(1, 1.0);
  p.eta = Eigen::VectorXd::Constant(1, -0.5);
  p.reg = 0.2;
  p.accuracy = 1e-12;
  auto r = solve_weights_radon(p);
  EXPECT_NEAR(r.beta[0], 1.3, 1e-10);
  p.eta[0] = 1.5;
  r = solve_weights_radon(p);
  EXPECT_EQ(r.beta[0], 0.0);
  EXPECT_NEAR(r.objective, 0.5, 1e-12);
}

TEST(WeightsRadon, MatchesNestedGridOracle) {
  Rng rng(22);
  for (int t = 0; t < 30; ++t) {
    const int n = 1 + static_cast<int>(rng.index(3));
    WeightProblemRadon p;
    p.alpha.resize(n);
    p.eta.resize(n);
    for (int i = 0; i < n; ++i) p.alpha[i] = rng.uniform(0, 2), p.eta[i] = rng.normal();
    p.reg = rng.uniform(0, 0.5);
    p.accuracy = 1e-12;
    const auto r = solve_weights_radon(p, nullptr, 5000);
    EXPECT_NEAR(r.objective, oracle::weights_nested_grid_radon(p.alpha, p.eta, p.reg), 1e-7);
  }
}

TEST(Prox, ScalarClosedForm) {
  // n = 1: minimise ½(β − a)² + cβ + (β − z)²/(2σ) over β ≥ 0, a smooth quadratic.
  Rng rng(23);
  for (int t = 0; t < 200; ++t) {
    const double a = rng.uniform(0, 2), z = rng.uniform(-3, 3), s = std::pow(10.0, rng.uniform(-2, 2));
    const double c = rng.uniform(0, 1);
    const double expect = std::max(0.0, (a + z / s - c) / (1.0 + 1.0 / s));
    const auto b = prox_l1sq_l1_pos(Eigen::VectorXd::Constant(1, a), Eigen::VectorXd::Constant(1, z), s, c);
    EXPECT_NEAR(b[0], expect, 1e-12 * (1 + std::abs(z)));
  }
}

TEST(Prox, TwoCoordinatesByHand) {
  // α = (1, 1), z = (3, 1), σ = 1, c = 0. Only the first coordinate moves: t = β₀ − 1 and
  // β₀ − 3 + t = 0 gives β₀ = 2; the second stays at α₁ since |z₁ − α₁| = 0 ≤ σt.
  const auto b = prox_l1sq_l1_pos(Eigen::Vector2d(1, 1), Eigen::Vector2d(3, 1), 1.0, 0.0);
  EXPECT_NEAR(b[0], 2.0, 1e-14);
  EXPECT_NEAR(b[1], 1.0, 1e-14);
}

TEST(BnB, FindsMinimumOfSingleBumpAndIsWorkerIndependent) {
  const auto A = experiment_model<1>(ExperimentParams::defaults(ExperimentKind::Fast1D));
  const std::vector<const Kernel<1>*> ks{&A.rho()};
  // −ρ(x − 0.37) has its minimum −1 at 0.37.
  const CertificateFunction<1> f(ks, {{Point<1>{0.37}, -1.0, 0}}, 0.0);
  BnBTask<1> task;
  task.objective = &f;
  task.box = A.domain();
  task.tolerance = 1e-9;
  const auto r = bnb_minimize(task);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.value, -1.0, 1e-9);
  EXPECT_NEAR(r.x[0], 0.37, 1e-3);
  EXPECT_LE(r.lower_bound, -1.0);
  EXPECT_LE(r.value - r.lower_bound, task.tolerance);
  WorkerPool pool(3);
  const auto r3 = bnb_minimize(task, &pool);
  EXPECT_EQ(r3.x, r.x);
  EXPECT_EQ(r3.value, r.value);
  EXPECT_EQ(r3.boxes, r.boxes);
  task.mode = BnBMode::Max;
  const auto m = bnb_minimize(task);
  EXPECT_NEAR(m.value, 0.0, 1e-12);
  EXPECT_GE(m.lower_bound, m.value);
}

TEST(BnB, LowerBoundNeverExceedsScan) {
  const auto A = experiment_model<1>(ExperimentParams::defaults(ExperimentKind::Fast1D));
  const std::vector<const Kernel<1>*> ks{&A.phi(), &A.rho()};
  Rng rng(24);
  for (int t = 0; t < 40; ++t) {
    std::vector<CertificateFunction<1>::Bump> bumps;
    for (int j = 0; j < 3; ++j) bumps.push_back({Point<1>{rng.uniform()}, rng.uniform(-1, 1), static_cast<int>(rng.index(2))});
    const CertificateFunction<1> f(ks, bumps, 0.0);
    BnBTask<1> task;
    task.objective = &f;
    task.box = A.domain();
    task.tolerance = 1e-6;
    const auto r = bnb_minimize(task);
    const auto scan = oracle::grid_scan<1>(f, A.domain(), 200001);
    EXPECT_LE(r.lower_bound, scan.min);
    EXPECT_LE(r.value, scan.min + task.tolerance);
  }
}
