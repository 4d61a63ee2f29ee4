#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "pointsource/core/measure.hpp"
#include "pointsource/kernels/certificate.hpp"
#include "pointsource/kernels/kernel.hpp"
#include "pointsource/util/parallel.hpp"
#include "pointsource/util/rng.hpp"

namespace ps {

/// Uniform sensor grid on Ω with cell-centred sensor positions.
template <int Dim>
struct SensorGrid {
  Domain<Dim> domain;
  std::array<int, Dim> counts{};
  double footprint_ratio = 0.4;

  SensorGrid() = default;
  SensorGrid(const Domain<Dim>& d, std::array<int, Dim> c, double ratio = 0.4)
      : domain(d), counts(c), footprint_ratio(ratio) {
    for (int a = 0; a < Dim; ++a)
      if (counts[a] < 1) throw std::invalid_argument("sensor grid: counts must be positive");
  }

  std::size_t size() const {
    std::size_t n = 1;
    for (int a = 0; a < Dim; ++a) n *= static_cast<std::size_t>(counts[a]);
    return n;
  }
  double spacing(int a) const { return (domain.upper[a] - domain.lower[a]) / counts[a]; }
  double min_spacing() const {
    double h = spacing(0);
    for (int a = 1; a < Dim; ++a) h = std::min(h, spacing(a));
    return h;
  }
  /// Footprint half-width r = 0.4 × spacing.
  double footprint() const { return footprint_ratio * min_spacing(); }

  /// Axis index tuple of sensor i; axis 0 varies fastest.
  std::array<int, Dim> unravel(std::size_t i) const {
    std::array<int, Dim> c;
    for (int a = 0; a < Dim; ++a) {
      c[a] = static_cast<int>(i % static_cast<std::size_t>(counts[a]));
      i /= static_cast<std::size_t>(counts[a]);
    }
    return c;
  }
  std::size_t ravel(const std::array<int, Dim>& c) const {
    std::size_t i = 0;
    for (int a = Dim - 1; a >= 0; --a) i = i * static_cast<std::size_t>(counts[a]) + static_cast<std::size_t>(c[a]);
    return i;
  }
  double center_coord(int a, int j) const { return domain.lower[a] + (j + 0.5) * spacing(a); }
  Point<Dim> center(std::size_t i) const {
    const auto c = unravel(i);
    Point<Dim> z;
    for (int a = 0; a < Dim; ++a) z[a] = center_coord(a, c[a]);
    return z;
  }
};

/// Model constants used by the step-length rules.
struct ModelConstants {
  double L = 0.0;              ///< A_*A ≼ L𝒟 (randomised estimate × 1.05)
  double L_pairing = 0.0;      ///< analytic bound from the autoconvolution pairing, when applicable
  double L_radon = 0.0;        ///< sup_x Σᵢ φᵢ(x)², Lipschitz factor of F′ in the Radon norm
  int N_psi = 0;               ///< maximum number of overlapping sensor supports
  double L_psi = 0.0;          ///< Lipschitz constant of each φᵢ
  double L_grad_psi = 0.0;     ///< Lipschitz constant of each ∇φᵢ
  double M_psi = 0.0;          ///< sup |φᵢ|
  double Theta_F = 0.0;        ///< firm transport Lipschitz factor
};

/// Sensor-grid operator [Aμ]ᵢ = ∫ φ(x − zᵢ) dμ(x) with a shared measurement kernel φ.
template <int Dim>
class ForwardModel {
public:
  ForwardModel(SensorGrid<Dim> grid, Kernel<Dim> phi, Kernel<Dim> rho)
      : grid_(std::move(grid)), phi_(std::move(phi)), rho_(std::move(rho)) {}

  const SensorGrid<Dim>& grid() const { return grid_; }
  const Domain<Dim>& domain() const { return grid_.domain; }
  const Kernel<Dim>& phi() const { return phi_; }
  const Kernel<Dim>& rho() const { return rho_; }
  std::size_t sensors() const { return grid_.size(); }

  /// Calls f(i) for every sensor whose footprint can contain x.
  template <class F>
  void for_sensors_near(const Point<Dim>& x, F&& f) const {
    std::array<int, Dim> lo, hi;
    for (int a = 0; a < Dim; ++a) {
      const double h = grid_.spacing(a);
      const double R = phi_.support_radius()[a];
      const double base = grid_.domain.lower[a] + 0.5 * h;
      lo[a] = std::max(0, static_cast<int>(std::floor((x[a] - R - base) / h)));
      hi[a] = std::min(grid_.counts[a] - 1, static_cast<int>(std::ceil((x[a] + R - base) / h)));
      if (lo[a] > hi[a]) return;
    }
    std::array<int, Dim> c = lo;
    for (;;) {
      f(grid_.ravel(c));
      int a = 0;
      while (a < Dim) {
        if (++c[a] <= hi[a]) break;
        c[a] = lo[a];
        ++a;
      }
      if (a == Dim) break;
    }
  }

  /// Aμ; each sensor entry is accumulated by one worker in spike order.
  std::vector<double> apply(const DiscreteMeasure<Dim>& mu, WorkerPool* pool = nullptr) const {
    std::vector<double> out(sensors(), 0.0);
    if (pool && pool->threads() > 1) {
      parallel_for(pool, sensors(), [&](std::size_t i) {
        const Point<Dim> z = grid_.center(i);
        double acc = 0.0;
        for (const auto& s : mu.spikes()) acc += s.w * phi_(s.x - z);
        out[i] = acc;
      });
      return out;
    }
    // Serial path visits only nearby sensors; per-sensor summation order is still spike order.
    for (const auto& s : mu.spikes())
      for_sensors_near(s.x, [&](std::size_t i) { out[i] += s.w * phi_(s.x - grid_.center(i)); });
    return out;
  }

  /// [A_*z](x) = Σᵢ zᵢ φ(x − zᵢ)
  double preadjoint(const std::vector<double>& z, const Point<Dim>& x) const {
    check_len(z);
    double acc = 0.0;
    for_sensors_near(x, [&](std::size_t i) { acc += z[i] * phi_(x - grid_.center(i)); });
    return acc;
  }

  Point<Dim> preadjoint_grad(const std::vector<double>& z, const Point<Dim>& x) const {
    check_len(z);
    Point<Dim> g{};
    g.fill(0.0);
    for_sensors_near(x, [&](std::size_t i) {
      double v;
      Point<Dim> kg;
      phi_.eval_with_grad(x - grid_.center(i), v, kg);
      for (int a = 0; a < Dim; ++a) g[a] += z[i] * kg[a];
    });
    return g;
  }

  /// Evaluates A_*z at many points in parallel.
  std::vector<double> preadjoint_many(const std::vector<double>& z, const std::vector<Point<Dim>>& xs,
                                      WorkerPool* pool = nullptr) const {
    std::vector<double> out(xs.size());
    parallel_for(pool, xs.size(), [&](std::size_t j) { out[j] = preadjoint(z, xs[j]); });
    return out;
  }

  /// Bumps representing scale·A_*z for a CertificateFunction (kernel id given by the caller).
  std::vector<typename CertificateFunction<Dim>::Bump> preadjoint_bumps(const std::vector<double>& z, double scale,
                                                                        int kernel_id) const {
    check_len(z);
    std::vector<typename CertificateFunction<Dim>::Bump> b;
    b.reserve(z.size());
    for (std::size_t i = 0; i < z.size(); ++i)
      if (z[i] != 0.0) b.push_back({grid_.center(i), scale * z[i], kernel_id});
    return b;
  }

  /// Maximum number of sensor supports containing a common point (open supports).
  int overlap_count() const {
    int n = 1;
    for (int a = 0; a < Dim; ++a) {
      const double R = phi_.support_radius()[a];
      int best = 0;
      for (int j = 0; j < grid_.counts[a]; ++j) {
        // Candidates just inside each support edge.
        for (double x : {grid_.center_coord(a, j) - R, grid_.center_coord(a, j) + R}) {
          for (double eps : {1e-12, -1e-12}) {
            const double p = x + eps * std::max(1.0, R);
            int cnt = 0;
            for (int k = 0; k < grid_.counts[a]; ++k)
              if (std::abs(p - grid_.center_coord(a, k)) < R) ++cnt;
            best = std::max(best, cnt);
          }
        }
      }
      n *= best;
    }
    return n;
  }

  /// sup_x Σᵢ φᵢ(x)² by a grid scan plus a Lipschitz slack for the unsampled gaps.
  double radon_lipschitz(int per_axis = 0) const {
    if (per_axis <= 0) per_axis = Dim == 1 ? 10000 : 256;
    double best = 0.0;
    std::size_t total = 1;
    for (int a = 0; a < Dim; ++a) total *= static_cast<std::size_t>(per_axis);
    Point<Dim> h;
    for (int a = 0; a < Dim; ++a) h[a] = (grid_.domain.upper[a] - grid_.domain.lower[a]) / (per_axis - 1);
    for (std::size_t t = 0; t < total; ++t) {
      std::size_t r = t;
      Point<Dim> x;
      for (int a = 0; a < Dim; ++a) {
        x[a] = grid_.domain.lower[a] + h[a] * static_cast<double>(r % per_axis);
        r /= per_axis;
      }
      double s = 0.0;
      for_sensors_near(x, [&](std::size_t i) {
        const double v = phi_(x - grid_.center(i));
        s += v * v;
      });
      best = std::max(best, s);
    }
    const int N = overlap_count();
    const double lip = 2.0 * N * phi_.sup_abs() * phi_.lipschitz();
    return best + lip * 0.5 * norm<Dim>(h);
  }

  ModelConstants constants(double L_estimate) const {
    ModelConstants c;
    c.L = L_estimate;
    c.N_psi = overlap_count();
    c.L_psi = phi_.lipschitz();
    c.L_grad_psi = phi_.lipschitz_grad();
    c.M_psi = phi_.sup_abs();
    c.L_radon = radon_lipschitz();
    const double m = static_cast<double>(sensors());
    const double theta_sq = std::min(2.0 * m * c.L_psi * c.L_psi, 4.0 * c.N_psi * c.L_psi * c.L_psi);
    c.Theta_F = std::sqrt(theta_sq);
    return c;
  }

private:
  void check_len(const std::vector<double>& z) const {
    if (z.size() != sensors()) throw std::invalid_argument("forward model: vector length differs from sensor count");
  }

  SensorGrid<Dim> grid_;
  Kernel<Dim> phi_;
  Kernel<Dim> rho_;
};

/// Builds the model with φ = θ∗ψ, θ the indicator of the footprint box, and ρ = normalised ψ∗ψ.
template <int Dim>
ForwardModel<Dim> make_sensor_model(const SensorGrid<Dim>& grid, const Kernel<Dim>& psi) {
  return ForwardModel<Dim>(grid, sensor_kernel<Dim>(grid.footprint(), psi), autoconvolution_kernel<Dim>(psi));
}

/// Analytic pairing bound: with ρ = (ψ∗ψ)/c and non-overlapping box footprints of volume |θ|,
/// ‖Aμ‖² ≤ N_θ |θ| ‖ψ∗μ‖² = N_θ |θ| c ⟨𝒟μ|μ⟩.
template <int Dim>
double pairing_bound(const SensorGrid<Dim>& grid, const Kernel<Dim>& psi) {
  double vol = 1.0, c = psi.amplitude() * psi.amplitude();
  for (int a = 0; a < Dim; ++a) {
    vol *= 2.0 * grid.footprint();
    c *= convolve(psi.profile(a), psi.profile(a))(0.0);
  }
  const double overlap = grid.footprint_ratio <= 0.5 ? 1.0 : std::ceil(2.0 * grid.footprint_ratio);
  return std::pow(overlap, Dim) * vol * c;
}

/// Smallest L̂ with ⟨A_*Aμ|μ⟩ ≤ L̂⟨𝒟μ|μ⟩ over random grid-supported measures, times 1.05.
/// quad_A(μ) = ‖Aμ‖², quad_D(μ) = ⟨𝒟μ|μ⟩.
template <int Dim>
double estimate_L_generic(const Domain<Dim>& domain, int resolution,
                          const std::function<double(const DiscreteMeasure<Dim>&)>& quad_A,
                          const std::function<double(const DiscreteMeasure<Dim>&)>& quad_D, std::uint64_t seed = 7,
                          double safety = 1.05) {
  if (resolution < 64) throw std::invalid_argument("estimate_L: resolution must be at least 64 per axis");
  Rng rng(seed);
  auto grid_point = [&]() {
    Point<Dim> x;
    for (int a = 0; a < Dim; ++a) {
      const double h = (domain.upper[a] - domain.lower[a]) / resolution;
      x[a] = domain.lower[a] + (static_cast<double>(rng.index(resolution)) + 0.5) * h;
    }
    return x;
  };
  double best = 0.0;
  auto consider = [&](const DiscreteMeasure<Dim>& mu) {
    const double d = quad_D(mu);
    if (!(d > 0.0)) throw KernelNotPsd("estimate_L: nonpositive 𝒟 quadratic form");
    best = std::max(best, quad_A(mu) / d);
  };
  // Single spikes over a regular sweep of the grid, then random sparse and dense combinations.
  std::size_t total = 1;
  for (int a = 0; a < Dim; ++a) total *= static_cast<std::size_t>(resolution);
  const std::size_t stride = std::max<std::size_t>(1, total / 2048);
  for (std::size_t t = 0; t < total; t += stride) {
    std::size_t r = t;
    Point<Dim> x;
    for (int a = 0; a < Dim; ++a) {
      const double h = (domain.upper[a] - domain.lower[a]) / resolution;
      x[a] = domain.lower[a] + (static_cast<double>(r % resolution) + 0.5) * h;
      r /= resolution;
    }
    consider(DiscreteMeasure<Dim>({{x, 1.0}}, MeasureMode::Signed));
  }
  for (int trial = 0; trial < 600; ++trial) {
    const int k = trial < 200 ? 2 : (trial < 400 ? 3 + static_cast<int>(rng.index(6)) : 16 + static_cast<int>(rng.index(48)));
    DiscreteMeasure<Dim> mu(MeasureMode::Signed);
    const bool same_sign = trial % 2 == 0;
    for (int j = 0; j < k; ++j) {
      const double w = same_sign ? rng.uniform(0.1, 1.0) : rng.uniform(-1.0, 1.0);
      mu.add(grid_point(), w);
    }
    mu.prune(domain.diameter());
    if (mu.empty()) continue;
    consider(mu);
  }
  return safety * best;
}

template <int Dim>
double estimate_L(const ForwardModel<Dim>& model, int resolution, std::uint64_t seed = 7) {
  return estimate_L_generic<Dim>(
      model.domain(), resolution,
      [&](const DiscreteMeasure<Dim>& mu) {
        const auto y = model.apply(mu);
        double s = 0.0;
        for (double v : y) s += v * v;
        return s;
      },
      [&](const DiscreteMeasure<Dim>& mu) { return d_inner(mu, mu, model.rho()); }, seed);
}

}  // namespace ps
