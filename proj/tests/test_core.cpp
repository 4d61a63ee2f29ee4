#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "pointsource/core/measure.hpp"
#include "pointsource/kernels/kernel.hpp"
#include "pointsource/util/rng.hpp"

using namespace ps;

namespace {

DiscreteMeasure<1> m1(std::initializer_list<std::pair<double, double>> atoms,
                      MeasureMode mode = MeasureMode::Signed) {
  DiscreteMeasure<1> m(mode);
  for (const auto& [x, w] : atoms) m.add(Point<1>{x}, w);
  return m;
}

}  // namespace

TEST(Measure, RadonNormSumsAbsoluteWeightsAfterPruning) {
  const auto mu = m1({{0.2, 1.5}, {0.7, -2.0}, {0.2, 0.5}});
  EXPECT_DOUBLE_EQ(radon_norm(mu), 4.0);
  // Coincident atoms cancel before the norm is taken.
  EXPECT_DOUBLE_EQ(radon_norm(m1({{0.3, 1.0}, {0.3, -1.0}})), 0.0);
}

TEST(Measure, NonnegativeModeRejectsNegativeWeights) {
  DiscreteMeasure<1> mu(MeasureMode::Nonnegative);
  EXPECT_NO_THROW(mu.add(Point<1>{0.1}, 0.0));
  EXPECT_THROW(mu.add(Point<1>{0.1}, -1e-3), std::invalid_argument);
}

TEST(Measure, PruneMergesNearbyAtomsAndKeepsFirstPosition) {
  auto mu = m1({{0.5, 1.0}, {0.5 + 1e-14, 2.0}, {0.8, 0.0}});
  mu.prune();
  ASSERT_EQ(mu.size(), 1u);
  EXPECT_DOUBLE_EQ(mu[0].x[0], 0.5);
  EXPECT_DOUBLE_EQ(mu[0].w, 3.0);
}

TEST(Measure, DifferenceIsSigned) {
  const auto a = m1({{0.1, 1.0}}, MeasureMode::Nonnegative);
  const auto b = m1({{0.1, 3.0}}, MeasureMode::Nonnegative);
  const auto d = (a - b).pruned();
  EXPECT_EQ(d.mode(), MeasureMode::Signed);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_DOUBLE_EQ(d[0].w, -2.0);
}

TEST(Measure, DNormMatchesTriangleKernelByHand) {
  // Triangle of half-width 0.2: ρ(0) = 1, ρ(0.1) = 0.5.
  const auto rho = triangle_kernel<1>(0.2);
  const auto mu = m1({{0.3, 2.0}, {0.4, -1.0}});
  // 4·1 + 1·1 − 2·2·1·0.5 = 3
  EXPECT_NEAR(d_norm_sq<1>(mu, rho), 3.0, 1e-14);
  EXPECT_NEAR(apply_D<1>(mu, rho, Point<1>{0.35}), 2.0 * 0.75 - 1.0 * 0.75, 1e-14);
}

TEST(Measure, DNormIsNonnegativeForAutoconvolutionKernel) {
  const auto rho = autoconvolution_kernel<1>(fast_spread<1>(0.05));
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    DiscreteMeasure<1> mu(MeasureMode::Signed);
    double mass = 0.0;
    for (int j = 0; j < 6; ++j) {
      const double w = rng.uniform(-1.0, 1.0);
      mass += std::abs(w);
      mu.add(Point<1>{rng.uniform(0.0, 0.2)}, w);
    }
    EXPECT_GE(d_norm_sq<1>(mu, rho), -1e-9 * mass * mass);
  }
}

TEST(Transport, VCostByHand) {
  // μ₀ = δ₀.₂, μ₁ = δ₀.₅, γ moves 0.6 from 0.2 to 0.5.
  const auto mu0 = m1({{0.2, 1.0}});
  const auto mu1 = m1({{0.5, 1.0}});
  TransportPlan<1> g;
  g.add(Point<1>{0.2}, Point<1>{0.5}, 0.6);
  // ½·0.3²·0.6 = 0.027; marginal defect 0.4δ₀.₅ − 0.4δ₀.₂ has norm 0.8, E = 0.32.
  EXPECT_NEAR(v_cost<1>(mu0, mu1, g, MarginalEnergy<1>::radon()), 0.347, 1e-15);
  EXPECT_NEAR(v_cost<1>(mu0, mu1, g, MarginalEnergy<1>::radon(), 2.0, 0.5), 0.054 + 0.16, 1e-15);
}

TEST(Transport, DiagonalAtomsDoNotChangeVCost) {
  const auto rho = autoconvolution_kernel<1>(fast_spread<1>(0.05));
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    const auto mu0 = m1({{rng.uniform(), rng.uniform(-1, 1)}, {rng.uniform(), rng.uniform(-1, 1)}});
    const auto mu1 = m1({{rng.uniform(), rng.uniform(-1, 1)}});
    TransportPlan<1> g;
    g.add(mu0[0].x, mu1[0].x, rng.uniform());
    TransportPlan<1> gd = g;
    const Point<1> x = t % 2 ? mu0[1].x : Point<1>{rng.uniform()};
    gd.add(x, x, rng.uniform());
    for (const auto& E : {MarginalEnergy<1>::radon(), MarginalEnergy<1>::d(rho)}) {
      const double a = v_cost<1>(mu0, mu1, g, E), b = v_cost<1>(mu0, mu1, gd, E);
      EXPECT_NEAR(a, b, 1e-12 * std::max(1.0, std::abs(a)));
      EXPECT_GE(a, 0.0);
    }
  }
}

TEST(Transport, PlanMarginalsAndScaling) {
  TransportPlan<2> g;
  g.add(Point<2>{0.1, 0.1}, Point<2>{0.4, 0.5}, 2.0);
  g.add(Point<2>{0.3, 0.3}, Point<2>{0.3, 0.3}, -1.0);
  EXPECT_DOUBLE_EQ(g.mass_norm(), 3.0);
  EXPECT_NEAR(g.c2_cost(), 2.0 * 0.5 * (0.09 + 0.16), 1e-15);
  EXPECT_NEAR(g.scaled(0.5).c2_cost(), 0.5 * g.c2_cost(), 1e-15);
  const auto d = plan_marginal_diff(g);
  EXPECT_NEAR(radon_norm(d), 4.0, 1e-15);  // the diagonal atom cancels
}

TEST(MeasureCsv, RoundTripIsExact) {
  const auto mu = m1({{0.1 + 1e-17, 1.0 / 3.0}, {0.9, -2.5e-300}});
  std::stringstream ss;
  write_measure_csv(ss, mu);
  const auto back = read_measure_csv<1>(ss);
  ASSERT_EQ(back.size(), mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    EXPECT_EQ(back[i].x[0], mu[i].x[0]);
    EXPECT_EQ(back[i].w, mu[i].w);
  }
}
