#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "pointsource/core/point.hpp"
#include "pointsource/kernels/piecewise.hpp"

namespace ps {

/// Separable kernel k(x) = amplitude · Π_a p_a(x_a) built from compactly supported piecewise polynomials.
template <int Dim>
class Kernel {
public:
  Kernel() = default;
  explicit Kernel(std::array<PiecewisePolynomial, Dim> profiles, double amplitude = 1.0)
      : profiles_(std::move(profiles)), amplitude_(amplitude) {
    for (int a = 0; a < Dim; ++a) {
      derivs_[a] = profiles_[a].derivative();
      const auto& b = profiles_[a].breaks();
      radius_[a] = b.empty() ? 0.0 : std::max(std::abs(b.front()), std::abs(b.back()));
      lo_[a] = profiles_[a].support_lower();
      hi_[a] = profiles_[a].support_upper();
    }
    compute_metadata();
  }

  double amplitude() const { return amplitude_; }
  const PiecewisePolynomial& profile(int axis) const { return profiles_[axis]; }
  /// Half-width of the support box along each axis.
  const Point<Dim>& support_radius() const { return radius_; }
  double max_support_radius() const {
    double r = 0.0;
    for (int a = 0; a < Dim; ++a) r = std::max(r, radius_[a]);
    return r;
  }
  double lipschitz() const { return lip_; }
  double lipschitz_grad() const { return lip_grad_; }
  double sup_abs() const { return sup_; }
  bool is_symmetric() const { return symmetric_; }

  Kernel scaled(double s) const {
    Kernel k = *this;
    k.amplitude_ *= s;
    k.lip_ *= std::abs(s);
    k.lip_grad_ *= std::abs(s);
    k.sup_ *= std::abs(s);
    return k;
  }

  bool in_support(const Point<Dim>& x) const {
    for (int a = 0; a < Dim; ++a)
      if (x[a] < lo_[a] || x[a] >= hi_[a]) return false;
    return true;
  }

  double operator()(const Point<Dim>& x) const {
    if (!in_support(x)) return 0.0;
    double v = amplitude_;
    for (int a = 0; a < Dim; ++a) v *= profiles_[a](x[a]);
    return v;
  }

  Point<Dim> grad(const Point<Dim>& x) const {
    double v;
    Point<Dim> g;
    eval_with_grad(x, v, g);
    return g;
  }

  void eval_with_grad(const Point<Dim>& x, double& value, Point<Dim>& g) const {
    g.fill(0.0);
    value = 0.0;
    if (!in_support(x)) return;
    std::array<double, Dim> p, dp;
    for (int a = 0; a < Dim; ++a) {
      const int k = profiles_[a].locate(x[a]);
      const double t = x[a] - profiles_[a].breaks()[k];
      p[a] = profiles_[a].pieces()[k](t);
      dp[a] = derivs_[a].pieces()[k](t);
    }
    value = amplitude_;
    for (int a = 0; a < Dim; ++a) value *= p[a];
    for (int a = 0; a < Dim; ++a) {
      double ga = amplitude_ * dp[a];
      for (int b = 0; b < Dim; ++b)
        if (b != a) ga *= p[b];
      g[a] = ga;
    }
  }

private:
  void compute_metadata() {
    std::array<double, Dim> M, L, H;
    symmetric_ = true;
    for (int a = 0; a < Dim; ++a) {
      M[a] = profiles_[a].max_abs();
      L[a] = profiles_[a].lipschitz();
      H[a] = std::isfinite(L[a]) ? derivs_[a].lipschitz() : std::numeric_limits<double>::infinity();
      symmetric_ = symmetric_ && profile_symmetric(profiles_[a]);
    }
    const double amp = std::abs(amplitude_);
    double s = 1.0;
    for (int a = 0; a < Dim; ++a) s *= M[a];
    sup_ = amp * s;
    double l2 = 0.0, h2 = 0.0;
    for (int a = 0; a < Dim; ++a) {
      double la = L[a], ha = H[a];
      for (int b = 0; b < Dim; ++b)
        if (b != a) {
          la *= M[b];
          ha *= M[b];
        }
      l2 += la * la;
      h2 += ha * ha;
      for (int b = 0; b < Dim; ++b) {
        if (b == a) continue;
        double cross = L[a] * L[b];
        for (int c = 0; c < Dim; ++c)
          if (c != a && c != b) cross *= M[c];
        h2 += cross * cross;
      }
    }
    // A tiny relative margin absorbs rounding in the sampled extremum search.
    lip_ = amp * std::sqrt(l2) * (1.0 + 1e-9);
    lip_grad_ = amp * std::sqrt(h2) * (1.0 + 1e-9);
  }

  static bool profile_symmetric(const PiecewisePolynomial& p) {
    if (p.empty()) return true;
    const double lo = p.support_lower(), hi = p.support_upper();
    if (std::abs(lo + hi) > 1e-12 * (hi - lo)) return false;
    const double scale = std::max(p.max_abs(), 1e-300);
    for (int s = 1; s < 64; ++s) {
      // Irrational offsets keep the probes away from joints.
      const double x = hi * (s + 0.318309886) / 64.5;
      if (std::abs(p(x) - p(-x)) > 1e-12 * scale) return false;
    }
    return true;
  }

  std::array<PiecewisePolynomial, Dim> profiles_{};
  std::array<PiecewisePolynomial, Dim> derivs_{};
  Point<Dim> radius_{};
  Point<Dim> lo_{};
  Point<Dim> hi_{};
  double amplitude_ = 1.0;
  double lip_ = 0.0;
  double lip_grad_ = 0.0;
  double sup_ = 0.0;
  bool symmetric_ = true;
};

namespace profiles {

/// Even C¹ cubic on [−w, w]: f(0) = 1, f'(0) = 0, f(±w) = f'(±w) = 0.
inline PiecewisePolynomial cubic_bump(double w) {
  if (!(w > 0)) throw std::invalid_argument("cubic_bump: width must be positive");
  // Unit width: 1 − 3t² ∓ 2t³ on [−1,0] and [0,1].
  PiecewisePolynomial unit = PiecewisePolynomial::from_global(
      {-1.0, 0.0, 1.0}, {Polynomial({1.0, 0.0, -3.0, -2.0}), Polynomial({1.0, 0.0, -3.0, 2.0})});
  return unit.rescaled(w);
}

/// Indicator of [−r, r].
inline PiecewisePolynomial box(double r) {
  if (!(r > 0)) throw std::invalid_argument("box: radius must be positive");
  return PiecewisePolynomial({-r, r}, {Polynomial::constant(1.0)});
}

/// Triangle of half-width r and unit peak (a scaled autoconvolution of a box).
inline PiecewisePolynomial triangle(double r) {
  if (!(r > 0)) throw std::invalid_argument("triangle: radius must be positive");
  return PiecewisePolynomial::from_global(
      {-r, 0.0, r}, {Polynomial({1.0, 1.0 / r}), Polynomial({1.0, -1.0 / r})});
}

/// g∗g normalised to unit peak.
inline PiecewisePolynomial normalized_autoconvolution(const PiecewisePolynomial& g) {
  PiecewisePolynomial c = convolve(g, g);
  const double peak = c(0.0);
  if (!(peak > 0)) throw std::invalid_argument("autoconvolution: zero peak");
  return c.rescaled(1.0, 1.0 / peak);
}

}  // namespace profiles

/// Unit-peak C¹ piecewise-cubic spread of half-width w along each axis.
template <int Dim>
Kernel<Dim> fast_spread(double width) {
  std::array<PiecewisePolynomial, Dim> p;
  for (int a = 0; a < Dim; ++a) p[a] = profiles::cubic_bump(width);
  return Kernel<Dim>(std::move(p), 1.0);
}

/// Proximal kernel ρ = (ψ∗ψ)/(ψ∗ψ)(0) for a separable ψ.
template <int Dim>
Kernel<Dim> autoconvolution_kernel(const Kernel<Dim>& psi) {
  std::array<PiecewisePolynomial, Dim> p;
  for (int a = 0; a < Dim; ++a) p[a] = profiles::normalized_autoconvolution(psi.profile(a));
  return Kernel<Dim>(std::move(p), 1.0);
}

/// Sensor measurement kernel θ∗ψ with θ the indicator of [−r, r]ⁿ.
template <int Dim>
Kernel<Dim> sensor_kernel(double r, const Kernel<Dim>& psi) {
  std::array<PiecewisePolynomial, Dim> p;
  for (int a = 0; a < Dim; ++a) p[a] = convolve(profiles::box(r), psi.profile(a));
  return Kernel<Dim>(std::move(p), psi.amplitude());
}

template <int Dim>
Kernel<Dim> box_kernel(double r) {
  std::array<PiecewisePolynomial, Dim> p;
  for (int a = 0; a < Dim; ++a) p[a] = profiles::box(r);
  return Kernel<Dim>(std::move(p), 1.0);
}

template <int Dim>
Kernel<Dim> triangle_kernel(double r) {
  std::array<PiecewisePolynomial, Dim> p;
  for (int a = 0; a < Dim; ++a) p[a] = profiles::triangle(r);
  return Kernel<Dim>(std::move(p), 1.0);
}

struct PsdReport {
  bool pass = false;
  double min_real = 0.0;
  double max_real = 0.0;
  std::string message;
};

/// Samples a profile on a periodic grid twice as wide as its support and checks the DFT for negative modes.
inline PsdReport check_psd_profile(const PiecewisePolynomial& p, int grid_size) {
  if (grid_size < 16) throw std::invalid_argument("check_psd: grid_size must be at least 16");
  PsdReport rep;
  const double R = std::max(std::abs(p.support_lower()), std::abs(p.support_upper()));
  const int n = grid_size;
  const double period = 4.0 * R;
  const double h = period / n;
  std::vector<double> s(n);
  for (int j = 0; j < n; ++j) {
    const int jj = j <= n / 2 ? j : j - n;  // centred index for periodic wrap
    s[j] = p(jj * h);
  }
  rep.min_real = std::numeric_limits<double>::infinity();
  rep.max_real = -std::numeric_limits<double>::infinity();
  const double two_pi = 2.0 * std::acos(-1.0);
  for (int k = 0; k < n; ++k) {
    double re = 0.0;
    for (int j = 0; j < n; ++j) re += s[j] * std::cos(two_pi * static_cast<double>((static_cast<long long>(j) * k) % n) / n);
    rep.min_real = std::min(rep.min_real, re);
    rep.max_real = std::max(rep.max_real, re);
  }
  rep.pass = rep.min_real >= -1e-6 * std::max(rep.max_real, 0.0);
  rep.message = rep.pass ? "psd" : "psd-violation: negative Fourier mode";
  return rep;
}

/// For separable kernels the Fourier transform factorises, so each axis profile is checked.
template <int Dim>
PsdReport check_psd(const Kernel<Dim>& rho, int grid_size) {
  PsdReport out;
  out.pass = rho.amplitude() >= 0.0;
  out.min_real = std::numeric_limits<double>::infinity();
  out.max_real = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < Dim; ++a) {
    PsdReport r = check_psd_profile(rho.profile(a), grid_size);
    out.pass = out.pass && r.pass;
    out.min_real = std::min(out.min_real, r.min_real);
    out.max_real = std::max(out.max_real, r.max_real);
  }
  out.message = out.pass ? "psd" : "psd-violation: negative Fourier mode";
  return out;
}

}  // namespace ps
