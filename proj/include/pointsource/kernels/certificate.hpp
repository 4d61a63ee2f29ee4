#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "pointsource/core/point.hpp"
#include "pointsource/kernels/kernel.hpp"

namespace ps {

/// f(x) = Σ wⱼ k_{id(j)}(x − cⱼ) + offset, with a uniform cell index over bump centres
/// so that evaluation touches only bumps whose support can reach x.
template <int Dim>
class CertificateFunction {
public:
  struct Bump {
    Point<Dim> center{};
    double weight = 0.0;
    int kernel = 0;
  };

  CertificateFunction() = default;
  CertificateFunction(std::vector<const Kernel<Dim>*> kernels, std::vector<Bump> bumps, double offset)
      : kernels_(std::move(kernels)), bumps_(std::move(bumps)), offset_(offset) {
    build_index();
  }

  double offset() const { return offset_; }
  const std::vector<Bump>& bumps() const { return bumps_; }
  const std::vector<const Kernel<Dim>*>& kernels() const { return kernels_; }

  double operator()(const Point<Dim>& x) const {
    double v = offset_;
    for_each_near(x, x, [&](const Bump& b) { v += b.weight * (*kernels_[b.kernel])(x - b.center); });
    return v;
  }

  Point<Dim> grad(const Point<Dim>& x) const {
    Point<Dim> g{};
    g.fill(0.0);
    for_each_near(x, x, [&](const Bump& b) {
      double kv;
      Point<Dim> kg;
      kernels_[b.kernel]->eval_with_grad(x - b.center, kv, kg);
      for (int a = 0; a < Dim; ++a) g[a] += b.weight * kg[a];
    });
    return g;
  }

  /// Value and gradient at the box centre plus Lipschitz constants of f and ∇f valid on the box.
  struct BoxInfo {
    double value = 0.0;
    Point<Dim> grad{};
    double lip = 0.0;
    double lip_grad = 0.0;
  };

  BoxInfo eval_box(const Point<Dim>& lo, const Point<Dim>& hi) const {
    BoxInfo info;
    Point<Dim> c;
    for (int a = 0; a < Dim; ++a) c[a] = 0.5 * (lo[a] + hi[a]);
    info.value = offset_;
    info.grad.fill(0.0);
    for_each_near(lo, hi, [&](const Bump& b) {
      const Kernel<Dim>& k = *kernels_[b.kernel];
      // Skip bumps whose support box misses the query box.
      const auto& r = k.support_radius();
      for (int a = 0; a < Dim; ++a)
        if (b.center[a] + r[a] <= lo[a] || b.center[a] - r[a] >= hi[a]) return;
      double kv;
      Point<Dim> kg;
      k.eval_with_grad(c - b.center, kv, kg);
      info.value += b.weight * kv;
      for (int a = 0; a < Dim; ++a) info.grad[a] += b.weight * kg[a];
      info.lip += std::abs(b.weight) * k.lipschitz();
      info.lip_grad += std::abs(b.weight) * k.lipschitz_grad();
    });
    return info;
  }

  /// Global Lipschitz constant Σ|wⱼ| L_k.
  double lipschitz() const {
    double l = 0.0;
    for (const auto& b : bumps_) l += std::abs(b.weight) * kernels_[b.kernel]->lipschitz();
    return l;
  }

private:
  void build_index() {
    reach_.fill(0.0);
    for (const auto* k : kernels_)
      for (int a = 0; a < Dim; ++a) reach_[a] = std::max(reach_[a], k->support_radius()[a]);
    if (bumps_.empty()) return;
    for (int a = 0; a < Dim; ++a) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (const auto& b : bumps_) {
        lo = std::min(lo, b.center[a]);
        hi = std::max(hi, b.center[a]);
      }
      origin_[a] = lo;
      cell_[a] = std::max(reach_[a], 1e-9 * std::max(1.0, hi - lo));
      count_[a] = static_cast<int>(std::floor((hi - lo) / cell_[a])) + 1;
    }
    std::size_t total = 1;
    for (int a = 0; a < Dim; ++a) total *= static_cast<std::size_t>(count_[a]);
    start_.assign(total + 1, 0);
    std::vector<std::size_t> cell_of(bumps_.size());
    for (std::size_t j = 0; j < bumps_.size(); ++j) {
      cell_of[j] = linear_index(cell_coords(bumps_[j].center));
      ++start_[cell_of[j] + 1];
    }
    for (std::size_t c = 0; c < total; ++c) start_[c + 1] += start_[c];
    order_.assign(bumps_.size(), 0);
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t j = 0; j < bumps_.size(); ++j) order_[fill[cell_of[j]]++] = j;
  }

  std::array<int, Dim> cell_coords(const Point<Dim>& x) const {
    std::array<int, Dim> c;
    for (int a = 0; a < Dim; ++a)
      c[a] = std::clamp(static_cast<int>(std::floor((x[a] - origin_[a]) / cell_[a])), 0, count_[a] - 1);
    return c;
  }

  std::size_t linear_index(const std::array<int, Dim>& c) const {
    std::size_t idx = 0;
    for (int a = Dim - 1; a >= 0; --a) idx = idx * static_cast<std::size_t>(count_[a]) + static_cast<std::size_t>(c[a]);
    return idx;
  }

  /// Visits, in a fixed order, every bump whose centre lies within reach of the box [lo, hi].
  template <class F>
  void for_each_near(const Point<Dim>& lo, const Point<Dim>& hi, F&& f) const {
    if (bumps_.empty()) return;
    std::array<int, Dim> c0, c1;
    for (int a = 0; a < Dim; ++a) {
      const double l = (lo[a] - reach_[a] - origin_[a]) / cell_[a];
      const double h = (hi[a] + reach_[a] - origin_[a]) / cell_[a];
      if (h < 0.0 || l >= static_cast<double>(count_[a])) return;
      c0[a] = std::max(0, static_cast<int>(std::floor(l)));
      c1[a] = std::min(count_[a] - 1, static_cast<int>(std::floor(h)));
    }
    std::array<int, Dim> c = c0;
    for (;;) {
      const std::size_t idx = linear_index(c);
      for (std::size_t p = start_[idx]; p < start_[idx + 1]; ++p) f(bumps_[order_[p]]);
      int a = 0;
      while (a < Dim) {
        if (++c[a] <= c1[a]) break;
        c[a] = c0[a];
        ++a;
      }
      if (a == Dim) break;
    }
  }

  std::vector<const Kernel<Dim>*> kernels_;
  std::vector<Bump> bumps_;
  double offset_ = 0.0;
  Point<Dim> reach_{};
  Point<Dim> origin_{};
  Point<Dim> cell_{};
  std::array<int, Dim> count_{};
  std::vector<std::size_t> start_;
  std::vector<std::size_t> order_;
};

}  // namespace ps
