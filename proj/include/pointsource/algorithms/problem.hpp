#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "pointsource/core/measure.hpp"
#include "pointsource/model/forward_model.hpp"
#include "pointsource/util/parallel.hpp"

namespace ps {

/// Forward differences on the sensor grid with Neumann boundary; output is axis-major (dim blocks of m).
template <int Dim>
class GridGradient {
public:
  explicit GridGradient(std::array<int, Dim> counts) : counts_(counts) {
    size_ = 1;
    for (int a = 0; a < Dim; ++a) size_ *= static_cast<std::size_t>(counts_[a]);
  }

  std::size_t size() const { return size_; }
  std::size_t dual_size() const { return Dim * size_; }

  std::vector<double> apply(const std::vector<double>& z) const {
    std::vector<double> g(dual_size(), 0.0);
    for (std::size_t i = 0; i < size_; ++i) {
      std::size_t stride = 1, r = i;
      for (int a = 0; a < Dim; ++a) {
        const int c = static_cast<int>(r % counts_[a]);
        r /= counts_[a];
        if (c + 1 < counts_[a]) g[a * size_ + i] = z[i + stride] - z[i];
        stride *= static_cast<std::size_t>(counts_[a]);
      }
    }
    return g;
  }

  /// ∇_hᵀ y
  std::vector<double> adjoint(const std::vector<double>& y) const {
    std::vector<double> z(size_, 0.0);
    for (std::size_t i = 0; i < size_; ++i) {
      std::size_t stride = 1, r = i;
      for (int a = 0; a < Dim; ++a) {
        const int c = static_cast<int>(r % counts_[a]);
        r /= counts_[a];
        if (c + 1 < counts_[a]) {
          const double v = y[a * size_ + i];
          z[i + stride] += v;
          z[i] -= v;
        }
        stride *= static_cast<std::size_t>(counts_[a]);
      }
    }
    return z;
  }

  /// ‖∇_h z‖_{2,1} = Σᵢ |(∇_h z)ᵢ|₂
  double l21(const std::vector<double>& z) const {
    const auto g = apply(z);
    double s = 0.0;
    for (std::size_t i = 0; i < size_; ++i) {
      double n = 0.0;
      for (int a = 0; a < Dim; ++a) n += g[a * size_ + i] * g[a * size_ + i];
      s += std::sqrt(n);
    }
    return s;
  }

  /// Cellwise projection onto the 2-ball of radius λ (prox of the conjugate of λ‖·‖_{2,1}).
  void project(std::vector<double>& y, double lambda) const {
    for (std::size_t i = 0; i < size_; ++i) {
      double n = 0.0;
      for (int a = 0; a < Dim; ++a) n += y[a * size_ + i] * y[a * size_ + i];
      n = std::sqrt(n);
      if (n > lambda) {
        const double s = lambda / n;
        for (int a = 0; a < Dim; ++a) y[a * size_ + i] *= s;
      }
    }
  }

  /// Power iteration estimate of ‖∇_h‖².
  double norm_sq_estimate(int iterations = 500) const {
    std::vector<double> z(size_);
    for (std::size_t i = 0; i < size_; ++i) z[i] = std::sin(1.0 + 3.7 * static_cast<double>(i)) + 0.1;
    double lam = 0.0;
    for (int it = 0; it < iterations; ++it) {
      auto w = adjoint(apply(z));
      double n = 0.0, d = 0.0;
      for (std::size_t i = 0; i < size_; ++i) {
        n += w[i] * z[i];
        d += z[i] * z[i];
      }
      lam = n / d;
      double wn = 0.0;
      for (double v : w) wn += v * v;
      wn = std::sqrt(wn);
      if (wn == 0.0) return 0.0;
      for (std::size_t i = 0; i < size_; ++i) z[i] = w[i] / wn;
    }
    return lam;
  }

private:
  std::array<int, Dim> counts_;
  std::size_t size_ = 0;
};

/// min ½‖Aμ [+ z] − b‖² + α‖μ‖_ℳ + δ_{≥0}(μ) [+ λ‖∇_h z‖_{2,1}]
template <int Dim>
struct Problem {
  const ForwardModel<Dim>* model = nullptr;
  std::vector<double> b;
  double alpha = 0.0;
  double lambda = 0.0;
  bool biased = false;

  const Domain<Dim>& domain() const { return model->domain(); }
  GridGradient<Dim> gradient_operator() const { return GridGradient<Dim>(model->grid().counts); }

  /// Aμ + z − b (z may be empty)
  std::vector<double> residual(const DiscreteMeasure<Dim>& mu, const std::vector<double>& z,
                               WorkerPool* pool = nullptr) const {
    auto r = model->apply(mu, pool);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
    if (!z.empty())
      for (std::size_t i = 0; i < r.size(); ++i) r[i] += z[i];
    return r;
  }

  double value(const DiscreteMeasure<Dim>& mu, const std::vector<double>& z = {}, WorkerPool* pool = nullptr) const {
    const auto r = residual(mu, z, pool);
    double s = 0.0;
    for (double v : r) s += v * v;
    double mass = 0.0;
    for (const auto& sp : mu.spikes()) mass += std::abs(sp.w);
    double v = 0.5 * s + alpha * mass;
    if (biased && !z.empty()) v += lambda * gradient_operator().l21(z);
    return v;
  }
};

inline double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace ps
