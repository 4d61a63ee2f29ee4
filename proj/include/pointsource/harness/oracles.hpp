#pragma once

// Reference computations used by the acceptance and property suites. They share no code with the
// solvers they check beyond kernel evaluation.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "pointsource/algorithms/problem.hpp"
#include "pointsource/kernels/certificate.hpp"

namespace ps::oracle {

/// Exact 1D total-variation denoising argmin_z ½‖z − y‖² + λ Σ|z_{i+1} − z_i| (taut-string direct method).
inline std::vector<double> tv_denoise_1d(const std::vector<double>& y, double lambda) {
  const int n = static_cast<int>(y.size());
  std::vector<double> x(y.size());
  if (n == 0) return x;
  int k = 0, k0 = 0, kplus = 0, kminus = 0;
  double umin = lambda, umax = -lambda;
  double vmin = y[0] - lambda, vmax = y[0] + lambda;
  const double two_lambda = 2.0 * lambda, min_lambda = -lambda;
  for (;;) {
    while (k == n - 1) {
      if (umin < 0.0) {
        do x[k0++] = vmin;
        while (k0 <= kminus);
        k = kminus = k0;
        vmin = y[k];
        umin = lambda;
        umax = vmin + umin - vmax;
      } else if (umax > 0.0) {
        do x[k0++] = vmax;
        while (k0 <= kplus);
        k = kplus = k0;
        vmax = y[k];
        umax = min_lambda;
        umin = vmax + umax - vmin;
      } else {
        vmin += umin / (k - k0 + 1);
        do x[k0++] = vmin;
        while (k0 <= k);
        return x;
      }
    }
    if ((umin += y[k + 1] - vmin) < min_lambda) {
      do x[k0++] = vmin;
      while (k0 <= kminus);
      k = kminus = kplus = k0;
      vmin = y[k];
      vmax = vmin + two_lambda;
      umin = lambda;
      umax = min_lambda;
    } else if ((umax += y[k + 1] - vmax) > lambda) {
      do x[k0++] = vmax;
      while (k0 <= kplus);
      k = kminus = kplus = k0;
      vmax = y[k];
      vmin = vmax - two_lambda;
      umin = lambda;
      umax = min_lambda;
    } else {
      ++k;
      if (umin >= lambda) {
        kminus = k;
        vmin += (umin - lambda) / (kminus - k0 + 1);
        umin = lambda;
      }
      if (umax <= min_lambda) {
        kplus = k;
        vmax += (umax + lambda) / (kplus - k0 + 1);
        umax = min_lambda;
      }
    }
  }
}

/// TV denoising on a sensor grid by a long Chambolle–Pock run; used where no direct method exists.
template <int Dim>
std::vector<double> tv_denoise_cp(const GridGradient<Dim>& G, const std::vector<double>& y, double lambda,
                                  int iterations) {
  const std::size_t m = y.size();
  const double L2 = 4.0 * Dim;
  const double tau = 1.0 / std::sqrt(L2), sigma = 0.99 / std::sqrt(L2);
  std::vector<double> z = y, zbar = y, p(G.dual_size(), 0.0);
  for (int it = 0; it < iterations; ++it) {
    const auto g = G.apply(zbar);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += sigma * g[i];
    G.project(p, lambda);
    const auto a = G.adjoint(p);
    for (std::size_t i = 0; i < m; ++i) {
      const double prev = z[i];
      z[i] = (z[i] - tau * a[i] + tau * y[i]) / (1.0 + tau);
      zbar[i] = 2.0 * z[i] - prev;
    }
  }
  return z;
}

template <int Dim>
double tv_objective(const GridGradient<Dim>& G, const std::vector<double>& z, const std::vector<double>& y,
                    double lambda) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += 0.5 * (z[i] - y[i]) * (z[i] - y[i]);
  return s + lambda * G.l21(z);
}

/// Projected gradient with step 1/λ_max for min ½βᵀDβ + (η + reg)ᵀβ over β ≥ 0.
inline Eigen::VectorXd weights_projected_gradient(const Eigen::MatrixXd& D, const Eigen::VectorXd& eta, double reg,
                                                  long iterations) {
  const Eigen::Index n = eta.size();
  Eigen::VectorXd c = eta.array() + reg;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D, Eigen::EigenvaluesOnly);
  const double lmax = es.eigenvalues().maxCoeff();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  if (!(lmax > 0)) return b;
  const double step = 1.0 / lmax;
  for (long it = 0; it < iterations; ++it) b = (b - step * (D * b + c)).cwiseMax(0.0);
  return b;
}

/// Nested grid search for min ½‖β − α‖₁² + ηᵀβ + reg‖β‖₁ over β ≥ 0 (convex, so zooming on the best
/// grid point with a two-cell margin keeps the minimiser in the box).
inline double weights_nested_grid_radon(const Eigen::VectorXd& alpha, const Eigen::VectorXd& eta, double reg,
                                        Eigen::VectorXd* argmin = nullptr, int levels = 40, int cells = 10) {
  const Eigen::Index n = eta.size();
  auto f = [&](const Eigen::VectorXd& b) {
    const double t = (b - alpha).lpNorm<1>();
    return 0.5 * t * t + eta.dot(b) + reg * b.sum();
  };
  // ½(s − ‖α‖₁)² − c·s exceeds f(0) for s > 2(‖α‖₁ + c), c the largest negative slope.
  double c = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) c = std::max(c, -(eta[i] + reg));
  const double B = 2.0 * (alpha.lpNorm<1>() + c) + 1.0;
  Eigen::VectorXd lo = Eigen::VectorXd::Zero(n), hi = Eigen::VectorXd::Constant(n, B);
  Eigen::VectorXd best = Eigen::VectorXd::Zero(n);
  double fbest = f(best);
  std::vector<int> idx(n);
  for (int level = 0; level < levels; ++level) {
    const Eigen::VectorXd h = (hi - lo) / cells;
    std::fill(idx.begin(), idx.end(), 0);
    Eigen::VectorXd b(n);
    for (;;) {
      for (Eigen::Index i = 0; i < n; ++i) b[i] = lo[i] + idx[i] * h[i];
      const double v = f(b);
      if (v < fbest) {
        fbest = v;
        best = b;
      }
      Eigen::Index i = 0;
      while (i < n && ++idx[i] > cells) idx[i++] = 0;
      if (i == n) break;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      lo[i] = std::max(0.0, best[i] - 2.0 * h[i]);
      hi[i] = best[i] + 2.0 * h[i];
    }
  }
  if (argmin) *argmin = best;
  return fbest;
}

template <int Dim>
struct GridScan {
  double min = std::numeric_limits<double>::infinity();
  Point<Dim> argmin{};
  double slack = 0.0;  ///< Lipschitz constant × largest distance to the nearest grid point
};

/// Minimum of a certificate function over a uniform grid with n points per axis, accumulating each
/// bump only over the grid points inside its support.
template <int Dim>
GridScan<Dim> grid_scan(const CertificateFunction<Dim>& f, const Domain<Dim>& dom, int n) {
  std::size_t total = 1;
  std::array<double, Dim> h;
  for (int a = 0; a < Dim; ++a) {
    total *= static_cast<std::size_t>(n);
    h[a] = (dom.upper[a] - dom.lower[a]) / (n - 1);
  }
  std::vector<double> vals(total, f.offset());
  for (const auto& b : f.bumps()) {
    const Kernel<Dim>& k = *f.kernels()[b.kernel];
    std::array<int, Dim> lo, hi;
    bool empty = false;
    for (int a = 0; a < Dim; ++a) {
      const double r = k.support_radius()[a];
      lo[a] = std::max(0, static_cast<int>(std::ceil((b.center[a] - r - dom.lower[a]) / h[a])));
      hi[a] = std::min(n - 1, static_cast<int>(std::floor((b.center[a] + r - dom.lower[a]) / h[a])));
      empty = empty || lo[a] > hi[a];
    }
    if (empty) continue;
    std::array<int, Dim> c = lo;
    for (;;) {
      Point<Dim> x;
      std::size_t lin = 0, stride = 1;
      for (int a = 0; a < Dim; ++a) {
        x[a] = dom.lower[a] + c[a] * h[a];
        lin += static_cast<std::size_t>(c[a]) * stride;
        stride *= static_cast<std::size_t>(n);
      }
      vals[lin] += b.weight * k(x - b.center);
      int a = 0;
      while (a < Dim && ++c[a] > hi[a]) c[a] = lo[a], ++a;
      if (a == Dim) break;
    }
  }
  GridScan<Dim> out;
  for (std::size_t i = 0; i < total; ++i)
    if (vals[i] < out.min) {
      out.min = vals[i];
      std::size_t r = i;
      for (int a = 0; a < Dim; ++a) {
        out.argmin[a] = dom.lower[a] + static_cast<double>(r % n) * h[a];
        r /= n;
      }
    }
  double half_diag = 0.0;
  for (int a = 0; a < Dim; ++a) half_diag += 0.25 * h[a] * h[a];
  out.slack = f.lipschitz() * std::sqrt(half_diag);
  return out;
}

}  // namespace ps::oracle
