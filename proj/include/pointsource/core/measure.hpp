#pragma once

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pointsource/core/point.hpp"
#include "pointsource/kernels/kernel.hpp"

namespace ps {

template <int Dim>
struct Spike {
  Point<Dim> x{};
  double w = 0.0;
};

enum class MeasureMode { Nonnegative, Signed };

/// Finite atomic measure Σ wₖ δ_{xₖ}.
template <int Dim>
class DiscreteMeasure {
public:
  DiscreteMeasure() = default;
  explicit DiscreteMeasure(MeasureMode mode) : mode_(mode) {}
  DiscreteMeasure(std::vector<Spike<Dim>> spikes, MeasureMode mode = MeasureMode::Nonnegative)
      : spikes_(std::move(spikes)), mode_(mode) {
    check_mode();
  }

  MeasureMode mode() const { return mode_; }
  const std::vector<Spike<Dim>>& spikes() const { return spikes_; }
  std::vector<Spike<Dim>>& spikes() { return spikes_; }
  std::size_t size() const { return spikes_.size(); }
  bool empty() const { return spikes_.empty(); }
  const Spike<Dim>& operator[](std::size_t i) const { return spikes_[i]; }
  Spike<Dim>& operator[](std::size_t i) { return spikes_[i]; }

  void add(const Point<Dim>& x, double w) {
    if (mode_ == MeasureMode::Nonnegative && w < 0.0)
      throw std::invalid_argument("measure: negative weight in nonnegative mode");
    spikes_.push_back({x, w});
  }

  /// Merges atoms closer than rel_tol·scale by weight summation and drops zero weights.
  /// The first occurrence keeps its position, so the result does not depend on hashing.
  DiscreteMeasure& prune(double scale = 1.0, double rel_tol = 1e-12) {
    const double tol = rel_tol * scale;
    std::vector<Spike<Dim>> out;
    out.reserve(spikes_.size());
    for (const auto& s : spikes_) {
      bool merged = false;
      for (auto& o : out) {
        if (norm<Dim>(o.x - s.x) <= tol) {
          o.w += s.w;
          merged = true;
          break;
        }
      }
      if (!merged) out.push_back(s);
    }
    spikes_.clear();
    for (const auto& s : out)
      if (s.w != 0.0) spikes_.push_back(s);
    return *this;
  }

  DiscreteMeasure pruned(double scale = 1.0, double rel_tol = 1e-12) const {
    DiscreteMeasure m = *this;
    m.prune(scale, rel_tol);
    return m;
  }

  /// Drops atoms whose weight magnitude is at most thresh.
  DiscreteMeasure& drop_small(double thresh) {
    std::vector<Spike<Dim>> out;
    for (const auto& s : spikes_)
      if (std::abs(s.w) > thresh) out.push_back(s);
    spikes_ = std::move(out);
    return *this;
  }

  double total_mass() const {
    double m = 0.0;
    for (const auto& s : spikes_) m += s.w;
    return m;
  }

  /// Weight at a location (sum over atoms within tol).
  double weight_at(const Point<Dim>& x, double tol = 0.0) const {
    double w = 0.0;
    for (const auto& s : spikes_)
      if (norm<Dim>(s.x - x) <= tol) w += s.w;
    return w;
  }

  /// ⟨f|μ⟩ = Σ wₖ f(xₖ)
  template <class F>
  double integrate(F&& f) const {
    double acc = 0.0;
    for (const auto& s : spikes_) acc += s.w * f(s.x);
    return acc;
  }

  DiscreteMeasure as_signed() const {
    DiscreteMeasure m(MeasureMode::Signed);
    m.spikes_ = spikes_;
    return m;
  }

  /// Concatenation of atoms; the result is signed so that differences are representable.
  friend DiscreteMeasure operator+(const DiscreteMeasure& a, const DiscreteMeasure& b) {
    DiscreteMeasure m(MeasureMode::Signed);
    m.spikes_ = a.spikes_;
    m.spikes_.insert(m.spikes_.end(), b.spikes_.begin(), b.spikes_.end());
    return m;
  }
  friend DiscreteMeasure operator-(const DiscreteMeasure& a, const DiscreteMeasure& b) {
    DiscreteMeasure m(MeasureMode::Signed);
    m.spikes_ = a.spikes_;
    for (const auto& s : b.spikes_) m.spikes_.push_back({s.x, -s.w});
    return m;
  }
  friend DiscreteMeasure operator*(double c, const DiscreteMeasure& a) {
    DiscreteMeasure m(a.mode_ == MeasureMode::Nonnegative && c >= 0 ? MeasureMode::Nonnegative : MeasureMode::Signed);
    m.spikes_ = a.spikes_;
    for (auto& s : m.spikes_) s.w *= c;
    return m;
  }

private:
  void check_mode() const {
    if (mode_ != MeasureMode::Nonnegative) return;
    for (const auto& s : spikes_)
      if (s.w < 0.0) throw std::invalid_argument("measure: negative weight in nonnegative mode");
  }

  std::vector<Spike<Dim>> spikes_;
  MeasureMode mode_ = MeasureMode::Nonnegative;
};

/// ‖μ‖_ℳ over the pruned measure.
template <int Dim>
double radon_norm(const DiscreteMeasure<Dim>& mu, double scale = 1.0) {
  double s = 0.0;
  const DiscreteMeasure<Dim> m = mu.pruned(scale);
  for (const auto& sp : m.spikes()) s += std::abs(sp.w);
  return s;
}

/// [𝒟μ](x) = Σ wⱼ ρ(x − xⱼ)
template <int Dim>
double apply_D(const DiscreteMeasure<Dim>& mu, const Kernel<Dim>& rho, const Point<Dim>& x) {
  double acc = 0.0;
  for (const auto& s : mu.spikes()) acc += s.w * rho(x - s.x);
  return acc;
}

/// ⟨μ|ν⟩_𝒟 = Σᵢⱼ wᵢ vⱼ ρ(xᵢ − yⱼ)
template <int Dim>
double d_inner(const DiscreteMeasure<Dim>& mu, const DiscreteMeasure<Dim>& nu, const Kernel<Dim>& rho) {
  double acc = 0.0;
  for (const auto& a : mu.spikes())
    for (const auto& b : nu.spikes()) acc += a.w * b.w * rho(a.x - b.x);
  return acc;
}

struct KernelNotPsd : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// ‖μ‖²_𝒟; throws KernelNotPsd if the value is below −1e-9·(Σ|w|)².
template <int Dim>
double d_norm_sq(const DiscreteMeasure<Dim>& mu, const Kernel<Dim>& rho) {
  const double v = d_inner(mu, mu, rho);
  double mass = 0.0;
  for (const auto& s : mu.spikes()) mass += std::abs(s.w);
  if (v < -1e-9 * mass * mass * std::max(1.0, rho.sup_abs()))
    throw KernelNotPsd("d_norm_sq: negative value, kernel is not positive semi-definite");
  return v;
}

template <int Dim>
struct PlanAtom {
  Point<Dim> source{};
  Point<Dim> target{};
  double mass = 0.0;
};

/// Finite atomic plan γ = Σ mⱼ δ_{(sⱼ, tⱼ)} on Ω².
template <int Dim>
class TransportPlan {
public:
  TransportPlan() = default;
  explicit TransportPlan(std::vector<PlanAtom<Dim>> atoms) : atoms_(std::move(atoms)) {}

  const std::vector<PlanAtom<Dim>>& atoms() const { return atoms_; }
  std::vector<PlanAtom<Dim>>& atoms() { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }
  void add(const Point<Dim>& s, const Point<Dim>& t, double m) { atoms_.push_back({s, t, m}); }

  /// ‖γ‖_ℳ
  double mass_norm() const {
    double m = 0.0;
    for (const auto& a : atoms_) m += std::abs(a.mass);
    return m;
  }

  /// |γ|(c₂) = Σ |mⱼ| c₂(sⱼ, tⱼ)
  double c2_cost() const {
    double c = 0.0;
    for (const auto& a : atoms_) c += std::abs(a.mass) * c2<Dim>(a.source, a.target);
    return c;
  }

  DiscreteMeasure<Dim> source_marginal() const {
    DiscreteMeasure<Dim> m(MeasureMode::Signed);
    for (const auto& a : atoms_) m.add(a.source, a.mass);
    return m;
  }
  DiscreteMeasure<Dim> target_marginal() const {
    DiscreteMeasure<Dim> m(MeasureMode::Signed);
    for (const auto& a : atoms_) m.add(a.target, a.mass);
    return m;
  }

  TransportPlan scaled(double s) const {
    TransportPlan p = *this;
    for (auto& a : p.atoms_) a.mass *= s;
    return p;
  }

private:
  std::vector<PlanAtom<Dim>> atoms_;
};

/// (π¹_# − π⁰_#)γ, pruned.
template <int Dim>
DiscreteMeasure<Dim> plan_marginal_diff(const TransportPlan<Dim>& gamma, double scale = 1.0) {
  DiscreteMeasure<Dim> m(MeasureMode::Signed);
  for (const auto& a : gamma.atoms()) {
    m.add(a.target, a.mass);
    m.add(a.source, -a.mass);
  }
  return m.prune(scale);
}

/// E_ℳ(ν₀,ν₁) = ½‖ν₁ − ν₀‖²_ℳ or E_𝒟(ν₀,ν₁) = ½‖ν₁ − ν₀‖²_𝒟.
template <int Dim>
struct MarginalEnergy {
  enum class Variant { RadonSquared, DSquared };
  Variant variant = Variant::RadonSquared;
  const Kernel<Dim>* rho = nullptr;
  double scale = 1.0;  // domain scale for atom identification

  static MarginalEnergy radon(double scale = 1.0) { return {Variant::RadonSquared, nullptr, scale}; }
  static MarginalEnergy d(const Kernel<Dim>& k, double scale = 1.0) { return {Variant::DSquared, &k, scale}; }

  double operator()(const DiscreteMeasure<Dim>& nu0, const DiscreteMeasure<Dim>& nu1) const {
    const DiscreteMeasure<Dim> diff = (nu1 - nu0).prune(scale);
    if (variant == Variant::RadonSquared) {
      const double n = radon_norm(diff, scale);
      return 0.5 * n * n;
    }
    if (!rho) throw std::invalid_argument("MarginalEnergy: missing kernel");
    return 0.5 * d_norm_sq(diff, *rho);
  }
};

/// V_{ℓc₂, L·E}(μ₀, μ₁; γ) = c_scale·|γ|(c₂) + e_scale·E(μ₀ − π⁰_#γ, μ₁ − π¹_#γ).
template <int Dim>
double v_cost(const DiscreteMeasure<Dim>& mu0, const DiscreteMeasure<Dim>& mu1, const TransportPlan<Dim>& gamma,
              const MarginalEnergy<Dim>& E, double c_scale = 1.0, double e_scale = 1.0) {
  if (c_scale < 0 || e_scale < 0) throw std::invalid_argument("v_cost: scales must be nonnegative");
  const double transport = gamma.c2_cost();
  const double marginal = E(mu0 - gamma.source_marginal(), mu1 - gamma.target_marginal());
  return c_scale * transport + e_scale * marginal;
}

/// CSV rows `x1[,x2],weight`.
template <int Dim>
void write_measure_csv(std::ostream& os, const DiscreteMeasure<Dim>& mu, bool header = true) {
  if (header) {
    for (int a = 0; a < Dim; ++a) os << "x" << (a + 1) << ",";
    os << "weight\n";
  }
  char buf[64];
  for (const auto& s : mu.spikes()) {
    for (int a = 0; a < Dim; ++a) {
      std::snprintf(buf, sizeof buf, "%.17g,", s.x[a]);
      os << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g\n", s.w);
    os << buf;
  }
}

template <int Dim>
DiscreteMeasure<Dim> read_measure_csv(std::istream& is, MeasureMode mode = MeasureMode::Signed) {
  DiscreteMeasure<Dim> mu(mode);
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line[0] == 'x') continue;
    }
    std::stringstream ss(line);
    Spike<Dim> s;
    std::string cell;
    for (int a = 0; a < Dim; ++a) {
      if (!std::getline(ss, cell, ',')) throw std::runtime_error("measure csv: missing coordinate");
      s.x[a] = std::stod(cell);
    }
    if (!std::getline(ss, cell, ',')) throw std::runtime_error("measure csv: missing weight");
    s.w = std::stod(cell);
    mu.add(s.x, s.w);
  }
  return mu;
}

}  // namespace ps
