#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "pointsource/core/measure.hpp"

namespace ps {

/// One atom per spike: (xⱼ, clamp(xⱼ − θτ·sign(aⱼ)∇v(xⱼ)), aⱼ).
template <int Dim, class Grad>
TransportPlan<Dim> transport_step(const DiscreteMeasure<Dim>& mu, Grad&& grad_v, double theta_tau,
                                  const Domain<Dim>& domain) {
  TransportPlan<Dim> gamma;
  for (const auto& s : mu.spikes()) {
    if (s.w == 0.0) continue;
    const double sgn = s.w > 0 ? 1.0 : -1.0;
    const Point<Dim> g = grad_v(s.x);
    gamma.add(s.x, domain.clamp(s.x - (theta_tau * sgn) * g), s.w);
  }
  return gamma;
}

/// μ̌ = μ + (π¹_# − π⁰_#)γ, pruned. Each atom's mass is removed from the spike it was built from
/// (bitwise-equal source), so tight spike clusters cannot pick up another spike's subtraction.
template <int Dim>
DiscreteMeasure<Dim> transported_measure(const DiscreteMeasure<Dim>& mu, const TransportPlan<Dim>& gamma,
                                         double scale) {
  std::vector<Spike<Dim>> sp = mu.spikes();
  std::vector<Spike<Dim>> targets;
  for (const auto& a : gamma.atoms()) {
    bool matched = false;
    for (auto& s : sp)
      if (s.x == a.source) {
        s.w -= a.mass;
        matched = true;
        break;
      }
    if (!matched) sp.push_back({a.source, -a.mass});
    targets.push_back({a.target, a.mass});
  }
  DiscreteMeasure<Dim> m(MeasureMode::Signed);
  for (const auto& s : sp) {
    // Rounding in the weight subtraction must not produce tiny negative weights.
    const bool clamp = mu.mode() == MeasureMode::Nonnegative && s.w < 0 && s.w > -1e-12 * (1.0 + std::abs(s.w));
    m.add(s.x, clamp ? 0.0 : s.w);
  }
  for (const auto& t : targets) m.add(t.x, t.w);
  m.prune(scale);
  DiscreteMeasure<Dim> out(mu.mode());
  for (const auto& s : m.spikes()) out.add(s.x, s.w);
  return out;
}

struct CurvatureReport {
  double curvature = 0.0;   ///< 𝒦 = Σ mⱼ B_v(xⱼ, yⱼ)
  double bound = 0.0;       ///< ℓ_F·|γ|(c₂)
  int retries = 0;
  int zeroed = 0;
};

/// 𝒦(γ) = Σ mⱼ B_v(xⱼ, yⱼ) with B_v(x, y) = v(y) − v(x) − ⟨∇v(x), y − x⟩.
template <int Dim, class Value, class Grad>
double curvature(const TransportPlan<Dim>& gamma, Value&& v, Grad&& grad_v) {
  double k = 0.0;
  for (const auto& a : gamma.atoms()) {
    const double b = v(a.target) - v(a.source) - dot<Dim>(grad_v(a.source), a.target - a.source);
    k += a.mass * b;
  }
  return k;
}

/// Reduces atom masses until 𝒦(γ) ≤ ℓ_F|γ|(c₂): atoms whose own Bregman term exceeds ℓ_F·c₂ are halved
/// (up to max_halvings times) and then dropped.
template <int Dim, class Value, class Grad>
TransportPlan<Dim> curvature_control(TransportPlan<Dim> gamma, Value&& v, Grad&& grad_v, double ell_F,
                                     CurvatureReport* report = nullptr, int max_halvings = 8) {
  CurvatureReport rep;
  std::vector<double> breg(gamma.size());
  for (std::size_t j = 0; j < gamma.size(); ++j) {
    const auto& a = gamma.atoms()[j];
    breg[j] = v(a.target) - v(a.source) - dot<Dim>(grad_v(a.source), a.target - a.source);
  }
  auto totals = [&]() {
    double k = 0.0, c = 0.0;
    for (std::size_t j = 0; j < gamma.size(); ++j) {
      const auto& a = gamma.atoms()[j];
      k += a.mass * breg[j];
      c += std::abs(a.mass) * c2<Dim>(a.source, a.target);
    }
    return std::pair<double, double>(k, ell_F * c);
  };
  auto violator = [&](std::size_t j) {
    const auto& a = gamma.atoms()[j];
    return a.mass * breg[j] > ell_F * std::abs(a.mass) * c2<Dim>(a.source, a.target);
  };
  auto [k, bound] = totals();
  while (k > bound && rep.retries < max_halvings) {
    ++rep.retries;
    for (std::size_t j = 0; j < gamma.size(); ++j)
      if (violator(j)) gamma.atoms()[j].mass *= 0.5;
    std::tie(k, bound) = totals();
  }
  if (k > bound) {
    TransportPlan<Dim> kept;
    std::vector<double> kb;
    for (std::size_t j = 0; j < gamma.size(); ++j) {
      if (violator(j)) {
        ++rep.zeroed;
        continue;
      }
      kept.atoms().push_back(gamma.atoms()[j]);
      kb.push_back(breg[j]);
    }
    gamma = std::move(kept);
    breg = std::move(kb);
    std::tie(k, bound) = totals();
  }
  rep.curvature = k;
  rep.bound = bound;
  if (report) *report = rep;
  return gamma;
}

/// Accepts when ‖γ‖·‖μ⁺ − μ̌‖ ≤ c_con·ε; otherwise the caller scales γ by rho_red.
template <int Dim>
bool convexity_ok(const TransportPlan<Dim>& gamma, const DiscreteMeasure<Dim>& mu_next,
                  const DiscreteMeasure<Dim>& mu_check, double c_con, double eps, double scale) {
  const double g = gamma.mass_norm();
  if (g == 0.0) return true;
  const double delta = radon_norm(mu_next - mu_check, scale);
  return g * delta <= c_con * eps;
}

}  // namespace ps
