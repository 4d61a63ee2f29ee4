#pragma once

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pointsource/model/experiment.hpp"
#include "pointsource/model/forward_model.hpp"

namespace ps {

enum class Method {
  MuFB,
  MuPDPS,
  FWf,
  SFB,
  RadonFB,
  RadonSFB,
  SPDPS,
  FPDPS,
  RadonSPDPS,
  RadonFPDPS,
};

inline std::string to_string(Method m) {
  switch (m) {
    case Method::MuFB: return "muFB";
    case Method::MuPDPS: return "muPDPS";
    case Method::FWf: return "FWf";
    case Method::SFB: return "sFB";
    case Method::RadonFB: return "radon2FB";
    case Method::RadonSFB: return "radon2sFB";
    case Method::SPDPS: return "sPDPS";
    case Method::FPDPS: return "fPDPS";
    case Method::RadonSPDPS: return "radon2sPDPS";
    case Method::RadonFPDPS: return "radon2fPDPS";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  for (Method m : {Method::MuFB, Method::MuPDPS, Method::FWf, Method::SFB, Method::RadonFB, Method::RadonSFB,
                   Method::SPDPS, Method::FPDPS, Method::RadonSPDPS, Method::RadonFPDPS})
    if (s == to_string(m)) return m;
  throw std::invalid_argument("unknown method: " + s);
}

/// Methods solving the biased problem with an auxiliary background z.
inline bool method_biased(Method m) {
  return m == Method::SPDPS || m == Method::FPDPS || m == Method::RadonSPDPS || m == Method::RadonFPDPS;
}
/// Methods whose measure step uses the squared Radon norm as marginal energy.
inline bool method_radon(Method m) {
  return m == Method::RadonFB || m == Method::RadonSFB || m == Method::RadonSPDPS || m == Method::RadonFPDPS;
}
inline bool method_sliding(Method m) {
  return m == Method::SFB || m == Method::RadonSFB || m == Method::SPDPS || m == Method::RadonSPDPS;
}
/// Forward-backward family, for which value quasi-monotonicity is asserted.
inline bool method_fb_family(Method m) {
  return m == Method::MuFB || m == Method::SFB || m == Method::RadonFB || m == Method::RadonSFB;
}
inline bool method_experimental(Method m) { return m == Method::RadonSPDPS || m == Method::RadonFPDPS; }

inline std::vector<Method> default_roster(ExperimentKind k) {
  if (experiment_biased(k)) return {Method::SPDPS, Method::FPDPS, Method::RadonSPDPS, Method::RadonFPDPS};
  return {Method::MuFB, Method::MuPDPS, Method::FWf, Method::SFB, Method::RadonFB, Method::RadonSFB};
}

struct MergePolicy {
  enum class Kind { None, Interpolate, MoveMass };
  Kind kind = Kind::None;
  double radius = 0.0;

  static MergePolicy none() { return {}; }
  static MergePolicy interpolate(double r) { return {Kind::Interpolate, r}; }
  static MergePolicy move_mass(double r) { return {Kind::MoveMass, r}; }

  /// "no", "i:<r>" or "m:<r>".
  static MergePolicy parse(const std::string& s) {
    if (s == "no" || s == "none" || s.empty()) return none();
    if (s.size() > 2 && s[1] == ':') {
      const double r = std::stod(s.substr(2));
      if (s[0] == 'i') return interpolate(r);
      if (s[0] == 'm') return move_mass(r);
    }
    throw std::invalid_argument("merge policy: expected no, i:<r> or m:<r>, got " + s);
  }
  std::string str() const {
    std::ostringstream os;
    if (kind == Kind::None) return "no";
    os << (kind == Kind::Interpolate ? "i:" : "m:") << radius;
    return os.str();
  }
};

/// εₖ = 0.5·base/(1 + 0.2k)^1.4 with base = τα; at most one insertion per call for k ≤ bootstrap.
struct ToleranceSchedule {
  double base = 1.0;
  int bootstrap = 10;

  double operator()(int k) const { return 0.5 * base / std::pow(1.0 + 0.2 * k, 1.4); }
};

/// Relative step factors and control parameters of one method.
struct StepConfig {
  double tau0 = 0.99;
  double theta0 = 0.0;
  double sigma0 = 0.0;    ///< dual step of μPDPS
  double sigma_p0 = 0.0;  ///< primal z step of the biased PDPS
  double sigma_d0 = 0.0;  ///< dual y step of the biased PDPS
  double kappa = 0.5;
  double c_con = 0.0;
  double tighten_c = 1.0;  ///< c in ε̄ = min(ε, c·ε²/‖γ‖)
  double ell_r = 0.0;
  MergePolicy merge;
  int bootstrap = 10;

  static StepConfig defaults(Method m, ExperimentKind kind) {
    StepConfig c;
    const bool two_d = experiment_dim(kind) == 2;
    switch (m) {
      case Method::MuFB: c.tau0 = 0.99; break;
      case Method::MuPDPS:
        c.tau0 = 5.0, c.sigma0 = 0.198, c.merge = MergePolicy::interpolate(0.01);
        break;
      case Method::FWf: c.tau0 = 1.0, c.merge = MergePolicy::interpolate(0.01); break;
      case Method::SFB: c.tau0 = 0.99, c.theta0 = 0.9, c.c_con = 100.0; break;
      case Method::RadonFB: c.tau0 = 0.99, c.merge = MergePolicy::move_mass(0.01); break;
      case Method::RadonSFB:
        c.tau0 = 0.99, c.theta0 = 0.9, c.c_con = 1000.0, c.merge = MergePolicy::move_mass(0.01);
        break;
      case Method::SPDPS:
        c.tau0 = 0.99, c.theta0 = 0.9, c.sigma_p0 = 0.99, c.sigma_d0 = 0.05, c.c_con = 100.0;
        break;
      case Method::FPDPS: c.tau0 = 0.99, c.sigma_p0 = 0.99, c.sigma_d0 = 0.05; break;
      case Method::RadonSPDPS:
        c.tau0 = 0.99, c.theta0 = 0.3, c.sigma_p0 = 0.99, c.sigma_d0 = two_d ? 0.15 : 0.05;
        c.c_con = two_d ? 10000.0 : 1000.0, c.merge = MergePolicy::move_mass(0.01);
        break;
      case Method::RadonFPDPS:
        c.tau0 = 0.99, c.sigma_p0 = 0.99, c.sigma_d0 = two_d ? 0.15 : 0.05, c.merge = MergePolicy::move_mass(0.01);
        break;
    }
    return c;
  }
};

struct Inequality {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool strict = false;
  bool holds() const { return strict ? lhs < rhs : lhs <= rhs; }
};

/// Absolute step lengths and the step conditions they were checked against.
struct ResolvedSteps {
  double tau = 0.0;
  double theta0 = 0.0;   ///< θ per iteration is θ₀/(τ(ℓ₀ + ℓ_F + ℓ_r)) with ℓ_F evaluated live
  double sigma = 0.0;    ///< μPDPS dual step
  double sigma_p = 0.0;
  double sigma_d = 0.0;
  double L_smooth = 0.0; ///< smoothness factor of the measure step (L, 2L, L_radon or 2L_radon)
  double L_z = 0.0;
  double ell_0 = 0.0;
  double grad_norm_sq = 0.0;  ///< bound on ‖∇_h‖²
  double beta = 0.0;
  std::vector<Inequality> inequalities;

  bool all_hold() const {
    for (const auto& q : inequalities)
      if (!q.holds()) return false;
    return true;
  }
};

struct InfeasibleConfig : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Resolves relative factors into absolute steps. For the biased PDPS family the smoothness split
/// ½‖A(ν−μ̌) + (w−z)‖² ≤ ‖A(ν−μ̌)‖² + ‖w−z‖² gives L₀ = 2L and L_z = 2; σ_d is chosen so that
/// β = σ_pσ_d‖∇_h‖²/(1 − σ_pL_z) equals σ_{d,0}.
inline ResolvedSteps resolve_steps(Method m, const StepConfig& c, const ModelConstants& k, int dim) {
  ResolvedSteps s;
  const bool radon = method_radon(m);
  const double L = radon ? k.L_radon : k.L;
  if (!(L > 0)) throw InfeasibleConfig("resolve_steps: smoothness constant must be positive");
  s.theta0 = method_sliding(m) ? c.theta0 : 0.0;
  s.ell_0 = 0.0;
  if (m == Method::MuPDPS) {
    s.L_smooth = L;
    s.tau = c.tau0 / L;
    s.sigma = c.sigma0;
    s.inequalities.push_back({"tau*sigma*L < 1", s.tau * s.sigma * L, 1.0, true});
    return s;
  }
  if (m == Method::FWf) {
    s.L_smooth = L;
    s.tau = 1.0;
    return s;
  }
  if (!method_biased(m)) {
    s.L_smooth = L;
    s.tau = c.tau0 / L;
    s.inequalities.push_back({"tau*L <= 1", s.tau * L, 1.0, false});
    if (s.theta0 > 0) s.inequalities.push_back({"theta*tau*(ell+ell_r+ell_F) <= 1", s.theta0, 1.0, false});
    return s;
  }
  s.L_smooth = 2.0 * L;
  s.L_z = 2.0;
  s.grad_norm_sq = 4.0 * dim;
  s.tau = c.tau0 / s.L_smooth;
  s.sigma_p = c.sigma_p0 / s.L_z;
  const double slack = 1.0 - s.sigma_p * s.L_z;
  if (!(slack > 0) || !(c.sigma_d0 > 0 && c.sigma_d0 < 1))
    throw InfeasibleConfig("resolve_steps: no beta in (0,1) satisfies the primal-dual step condition");
  s.sigma_d = c.sigma_d0 * slack / (s.sigma_p * s.grad_norm_sq);
  s.beta = s.sigma_p * s.sigma_d * s.grad_norm_sq / slack;
  s.inequalities.push_back({"sigma_p*L_z < 1", s.sigma_p * s.L_z, 1.0, true});
  s.inequalities.push_back({"0 < beta", 0.0, s.beta, true});
  s.inequalities.push_back({"beta < 1", s.beta, 1.0, true});
  // K_μ = 0, so M = 0 and the τ condition reduces to τL₀ < 1.
  s.inequalities.push_back({"tau*sigma_d*M < (1-tau*L0)*(1-beta)", 0.0, (1.0 - s.tau * s.L_smooth) * (1.0 - s.beta), true});
  s.inequalities.push_back({"tau*L0 < 1", s.tau * s.L_smooth, 1.0, true});
  s.inequalities.push_back({"sigma_p*sigma_d*|K_z|^2 + sigma_p*L_z < 1",
                            s.sigma_p * s.sigma_d * s.grad_norm_sq + s.sigma_p * s.L_z, 1.0, true});
  if (s.theta0 > 0) s.inequalities.push_back({"theta*tau*(ell0+ell_F+ell_r) <= 1", s.theta0, 1.0, false});
  return s;
}

}  // namespace ps
