#include <gtest/gtest.h>

#include <cmath>

#include "pointsource/kernels/certificate.hpp"
#include "pointsource/kernels/kernel.hpp"
#include "pointsource/model/experiment.hpp"
#include "pointsource/model/forward_model.hpp"
#include "pointsource/util/rng.hpp"

using namespace ps;

namespace {

// Unit-mass cubic spread of half-width 0.05, as used by the 1D experiments.
double psi_ref(double x) {
  const double w = 0.05, t = std::abs(x) / w;
  return t < 1.0 ? (1.0 - 3.0 * t * t + 2.0 * t * t * t) / w : 0.0;
}

// Composite Simpson on [a, b] with n (even) panels.
template <class F>
double simpson(F&& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

// Reference values from adaptive quadrature of the defining convolutions (footprint r = 0.004).
constexpr double kPhi0 = 0.15901696;
constexpr double kPhi005 = 0.1547008;
constexpr double kPhi02 = 0.1034752;
constexpr double kPhi03 = 0.0565248;
constexpr double kPhi052 = 6.272e-05;
constexpr double kDPhi02 = -4.56704;
constexpr double kRho02 = 0.7709508923076923;
constexpr double kRho05 = 0.17307692307692304;
constexpr double kRho08 = 0.0030956307692307813;

ForwardModel<1> fast1d_model() { return experiment_model<1>(ExperimentParams::defaults(ExperimentKind::Fast1D)); }

}  // namespace

TEST(Kernel, SpreadHasUnitMass) {
  const auto psi = experiment_spread<1>(0.05);
  EXPECT_NEAR(simpson([&](double x) { return psi(Point<1>{x}); }, -0.05, 0.05, 2000), 1.0, 1e-12);
  EXPECT_NEAR(psi(Point<1>{0.02}), psi_ref(0.02), 1e-12);
}

TEST(Kernel, SensorKernelMatchesQuadrature) {
  const auto A = fast1d_model();
  const double r = A.grid().footprint();
  auto phi_oracle = [&](double x) { return simpson([&](double s) { return psi_ref(x - s); }, -r, r, 4000); };
  const std::pair<double, double> ref[] = {{0.0, kPhi0}, {0.005, kPhi005}, {0.02, kPhi02}, {0.03, kPhi03}, {0.052, kPhi052}};
  for (const auto& [x, v] : ref) {
    EXPECT_NEAR(A.phi()(Point<1>{x}), v, 1e-12) << "x = " << x;
    EXPECT_NEAR(phi_oracle(x), v, 1e-9) << "x = " << x;
  }
  EXPECT_NEAR(A.phi().grad(Point<1>{0.02})[0], kDPhi02, 1e-9);
  EXPECT_DOUBLE_EQ(A.phi()(Point<1>{0.0541}), 0.0);
  EXPECT_NEAR(A.phi().max_support_radius(), r + 0.05, 1e-15);
}

TEST(Kernel, AutoconvolutionMatchesQuadrature) {
  const auto A = fast1d_model();
  auto conv = [&](double x) { return simpson([&](double s) { return psi_ref(s) * psi_ref(x - s); }, -0.05, 0.05, 4000); };
  const double c0 = conv(0.0);
  const std::pair<double, double> ref[] = {{0.0, 1.0}, {0.02, kRho02}, {0.05, kRho05}, {0.08, kRho08}};
  for (const auto& [x, v] : ref) {
    EXPECT_NEAR(A.rho()(Point<1>{x}), v, 1e-12) << "x = " << x;
    EXPECT_NEAR(conv(x) / c0, v, 1e-8) << "x = " << x;
  }
}

TEST(Kernel, GradientsMatchCentralDifferences) {
  const auto A = experiment_model<2>(ExperimentParams::defaults(ExperimentKind::Fast2D));
  Rng rng(11);
  for (const Kernel<2>* k : {&A.phi(), &A.rho()}) {
    const double R = k->max_support_radius();
    for (int t = 0; t < 300; ++t) {
      const Point<2> x{rng.uniform(-R, R), rng.uniform(-R, R)};
      const double h = 1e-6 * R;
      const Point<2> g = k->grad(x);
      for (int a = 0; a < 2; ++a) {
        Point<2> xp = x, xm = x;
        xp[a] += h;
        xm[a] -= h;
        const double fd = ((*k)(xp) - (*k)(xm)) / (2 * h);
        EXPECT_NEAR(g[a], fd, 1e-5 * std::max(1.0, std::abs(fd)));
      }
    }
  }
}

TEST(Kernel, LipschitzMetadataBoundsDifferenceQuotients) {
  const auto A = fast1d_model();
  Rng rng(12);
  for (const Kernel<1>* k : {&A.phi(), &A.rho()}) {
    const double R = k->max_support_radius();
    for (int t = 0; t < 5000; ++t) {
      const double x = rng.uniform(-1.2 * R, 1.2 * R), y = rng.uniform(-1.2 * R, 1.2 * R);
      if (x == y) continue;
      EXPECT_LE(std::abs((*k)(Point<1>{x}) - (*k)(Point<1>{y})) / std::abs(x - y), 1.01 * k->lipschitz());
      EXPECT_LE(std::abs(k->grad(Point<1>{x})[0] - k->grad(Point<1>{y})[0]) / std::abs(x - y),
                1.01 * k->lipschitz_grad());
    }
  }
}

TEST(Kernel, AutoconvolutionIsPositiveSemidefinite) {
  const auto A = fast1d_model();
  EXPECT_TRUE(check_psd<1>(A.rho(), 2048).pass);
  // A box is not a positive semidefinite kernel.
  EXPECT_FALSE(check_psd<1>(box_kernel<1>(0.1), 2048).pass);
}

TEST(Certificate, EvaluatesSumOfBumpsAndOffset) {
  const auto A = fast1d_model();
  const std::vector<const Kernel<1>*> ks{&A.phi(), &A.rho()};
  const CertificateFunction<1> f(ks, {{Point<1>{0.3}, 2.0, 0}, {Point<1>{0.32}, -1.0, 1}}, 0.25);
  const Point<1> x{0.31};
  EXPECT_NEAR(f(x), 0.25 + 2.0 * A.phi()(Point<1>{0.01}) - A.rho()(Point<1>{-0.01}), 1e-14);
  EXPECT_NEAR(f(Point<1>{0.9}), 0.25, 0.0);
  const double h = 1e-7;
  EXPECT_NEAR(f.grad(x)[0], (f(Point<1>{0.31 + h}) - f(Point<1>{0.31 - h})) / (2 * h), 1e-5);
}

TEST(ForwardModel, ApplyAndPreadjointAreAdjoint) {
  const auto A = fast1d_model();
  DiscreteMeasure<1> mu(MeasureMode::Signed);
  mu.add(Point<1>{0.5}, 1.0);
  const auto a = A.apply(mu);
  // A δ₀.₅ reads φ(0.5 − cᵢ) with sensor centres cᵢ = (i + ½)/100.
  EXPECT_NEAR(a[49], kPhi005, 1e-12);
  EXPECT_NEAR(a[50], kPhi005, 1e-12);
  const double r = A.grid().footprint();
  EXPECT_NEAR(a[47], simpson([&](double s) { return psi_ref(0.025 - s); }, -r, r, 4000), 1e-9);
  EXPECT_DOUBLE_EQ(a[44], 0.0);  // offset 0.055 is outside the support
  Rng rng(13);
  std::vector<double> z(A.sensors());
  for (auto& v : z) v = rng.normal();
  DiscreteMeasure<1> nu(MeasureMode::Signed);
  for (int j = 0; j < 5; ++j) nu.add(Point<1>{rng.uniform()}, rng.uniform(-1, 1));
  const auto Anu = A.apply(nu);
  double lhs = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) lhs += z[i] * Anu[i];
  const double rhs = nu.integrate([&](const Point<1>& x) { return A.preadjoint(z, x); });
  EXPECT_NEAR(lhs, rhs, 1e-12 * (1.0 + std::abs(lhs)));
}

TEST(ForwardModel, ConstantsOfFast1D) {
  const auto A = fast1d_model();
  const auto C = A.constants(estimate_L(A, 1000));
  // Support radius 0.054 covers at most 11 sensor centres spaced 0.01 apart.
  EXPECT_EQ(static_cast<int>(C.N_psi), 11);
  // ‖Aδₓ‖²/‖δₓ‖²_𝒟 = Σᵢφ(x − cᵢ)² is a lower bound for L; quadrature gives 0.0944 near its maximum.
  EXPECT_GE(C.L, 0.0944);
  EXPECT_NEAR(C.L, 0.0997, 5e-4);
}

TEST(ForwardModel, DescentInequalityWithEstimatedL) {
  const auto A = fast1d_model();
  const double L = A.constants(estimate_L(A, 1000)).L;
  Rng rng(14);
  for (int t = 0; t < 300; ++t) {
    DiscreteMeasure<1> d(MeasureMode::Signed);
    for (int j = 0; j < 4; ++j) d.add(Point<1>{rng.uniform()}, rng.uniform(-1, 1));
    const auto a = A.apply(d);
    double n = 0.0;
    for (double v : a) n += v * v;
    EXPECT_LE(n, L * d_norm_sq<1>(d, A.rho()) * (1 + 1e-12) + 1e-15);
  }
}

TEST(Experiment, GenerationIsDeterministicAndSeparated) {
  const auto p = ExperimentParams::defaults(ExperimentKind::Fast1D);
  const auto a = generate_experiment<1>(p), b = generate_experiment<1>(p);
  ASSERT_EQ(a.truth.size(), 4u);
  EXPECT_EQ(a.obs.b, b.obs.b);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_GE(a.truth[i].w, 2.0);
    EXPECT_LE(a.truth[i].w, 10.0);
    for (std::size_t j = 0; j < i; ++j) EXPECT_GE(std::abs(a.truth[i].x[0] - a.truth[j].x[0]), 0.04 - 1e-15);
  }
  auto q = p;
  q.seed = 1;
  EXPECT_NE(generate_experiment<1>(q).obs.b, a.obs.b);
}
