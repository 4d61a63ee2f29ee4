#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <vector>

namespace ps {

/// min ½βᵀDβ + ηᵀβ + reg·‖β‖₁ + δ_{≥0}(β) to accuracy inf_{g∈∂f}‖g‖_∞ ≤ accuracy/(1 + ‖β‖₁).
struct WeightProblemD {
  Eigen::MatrixXd D;
  Eigen::VectorXd eta;
  double reg = 0.0;
  double accuracy = 1e-9;
};

/// min ½‖β − α‖₁² + ηᵀβ + reg·‖β‖₁ + δ_{≥0}(β), same accuracy criterion.
struct WeightProblemRadon {
  Eigen::VectorXd alpha;
  Eigen::VectorXd eta;
  double reg = 0.0;
  double accuracy = 1e-9;
};

struct WeightResult {
  Eigen::VectorXd beta;
  double residual = 0.0;
  double objective = 0.0;
  int iterations = 0;
  bool used_fallback = false;  ///< Newton system was ill-conditioned or cycled
  bool converged = false;
};

inline double objective_D(const WeightProblemD& p, const Eigen::VectorXd& b) {
  return 0.5 * b.dot(p.D * b) + p.eta.dot(b) + p.reg * b.lpNorm<1>();
}

/// inf over ∂f(β) of the max-norm, for β ≥ 0 and gradient g of the smooth part plus reg.
inline double nonneg_residual(const Eigen::VectorXd& beta, const Eigen::VectorXd& g) {
  double r = 0.0;
  for (Eigen::Index i = 0; i < beta.size(); ++i)
    r = std::max(r, beta[i] > 0.0 ? std::abs(g[i]) : std::max(0.0, -g[i]));
  return r;
}

inline double residual_D(const WeightProblemD& p, const Eigen::VectorXd& b) {
  Eigen::VectorXd g = p.D * b + p.eta;
  g.array() += p.reg;
  return nonneg_residual(b, g);
}

namespace detail {

inline bool accuracy_met(double residual, double accuracy, const Eigen::VectorXd& b) {
  return residual <= accuracy / (1.0 + b.lpNorm<1>());
}

/// Projected forward-backward with step 1/λ_max(D), polishing on the current support now and then.
inline WeightResult weights_fb(const WeightProblemD& p, Eigen::VectorXd beta, int max_iter, int iter_offset) {
  WeightResult res;
  res.used_fallback = true;
  const Eigen::Index n = p.eta.size();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.D, Eigen::EigenvaluesOnly);
  const double lmax = es.eigenvalues().size() ? es.eigenvalues().maxCoeff() : 0.0;
  Eigen::VectorXd c = p.eta;
  c.array() += p.reg;
  if (!(lmax > 0.0)) {
    for (Eigen::Index i = 0; i < n; ++i)
      if (c[i] < 0.0) throw std::runtime_error("weights: unbounded problem (zero curvature, negative slope)");
    res.beta = Eigen::VectorXd::Zero(n);
    res.residual = 0.0;
    res.objective = 0.0;
    res.converged = true;
    res.iterations = iter_offset;
    return res;
  }
  const double step = 1.0 / lmax;
  double f = objective_D(p, beta);
  int it = 0;
  for (; it < max_iter; ++it) {
    const Eigen::VectorXd g = p.D * beta + c;
    if (accuracy_met(nonneg_residual(beta, g), p.accuracy, beta)) break;
    Eigen::VectorXd next = (beta - step * g).cwiseMax(0.0);
    const double fn = objective_D(p, next);
    beta = next;
    f = fn;
    if (it % 25 == 24) {
      // Solve the reduced system on the current support; accept only feasible, non-worse candidates.
      std::vector<Eigen::Index> S;
      for (Eigen::Index i = 0; i < n; ++i)
        if (beta[i] > 0.0) S.push_back(i);
      if (!S.empty()) {
        Eigen::MatrixXd DS(S.size(), S.size());
        Eigen::VectorXd cS(S.size());
        for (std::size_t a = 0; a < S.size(); ++a) {
          cS[a] = c[S[a]];
          for (std::size_t b = 0; b < S.size(); ++b) DS(a, b) = p.D(S[a], S[b]);
        }
        Eigen::VectorXd xS = DS.completeOrthogonalDecomposition().solve(-cS);
        if (xS.allFinite() && xS.minCoeff() >= 0.0) {
          Eigen::VectorXd cand = Eigen::VectorXd::Zero(n);
          for (std::size_t a = 0; a < S.size(); ++a) cand[S[a]] = xS[a];
          const double fc = objective_D(p, cand);
          if (fc <= f) {
            beta = cand;
            f = fc;
          }
        }
      }
    }
  }
  res.beta = beta;
  res.objective = objective_D(p, beta);
  res.residual = residual_D(p, beta);
  res.converged = accuracy_met(res.residual, p.accuracy, beta);
  res.iterations = iter_offset + it;
  return res;
}

/// Monotone primal active-set method on faces of the nonnegative orthant; finite in exact arithmetic
/// and robust to the cycling that the primal–dual active-set iteration shows on ill-conditioned D.
inline bool weights_active_set(const WeightProblemD& p, Eigen::VectorXd& beta, int& iterations, int max_iter) {
  const Eigen::Index n = p.eta.size();
  Eigen::VectorXd c = p.eta;
  c.array() += p.reg;
  beta = Eigen::VectorXd::Zero(n);
  std::vector<bool> passive(n, false);
  auto solve_face = [&](Eigen::VectorXd& z) {
    std::vector<Eigen::Index> P;
    for (Eigen::Index i = 0; i < n; ++i)
      if (passive[i]) P.push_back(i);
    z = Eigen::VectorXd::Zero(n);
    if (P.empty()) return true;
    Eigen::MatrixXd DP(P.size(), P.size());
    Eigen::VectorXd cP(P.size());
    for (std::size_t a = 0; a < P.size(); ++a) {
      cP[a] = c[P[a]];
      for (std::size_t b = 0; b < P.size(); ++b) DP(a, b) = p.D(P[a], P[b]);
    }
    const Eigen::VectorXd x = DP.completeOrthogonalDecomposition().solve(-cP);
    if (!x.allFinite()) return false;
    for (std::size_t a = 0; a < P.size(); ++a) z[P[a]] = x[a];
    return true;
  };
  for (int it = 0; it < max_iter; ++it) {
    ++iterations;
    const Eigen::VectorXd g = p.D * beta + c;
    if (accuracy_met(nonneg_residual(beta, g), p.accuracy, beta)) return true;
    Eigen::Index j = -1;
    double gmin = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!passive[i] && g[i] < gmin) {
        gmin = g[i];
        j = i;
      }
    if (j < 0) {
      // Residual sits on the passive set only: re-solve the current face.
      Eigen::VectorXd z;
      if (!solve_face(z)) return false;
      if (z.minCoeff() < 0.0 || objective_D(p, z) > objective_D(p, beta)) return false;
      beta = z;
      continue;
    }
    passive[j] = true;
    for (int inner = 0; inner <= n; ++inner) {
      Eigen::VectorXd z;
      if (!solve_face(z)) return false;
      bool feasible = true;
      double step = 1.0;
      for (Eigen::Index i = 0; i < n; ++i)
        if (passive[i] && z[i] <= 0.0) {
          feasible = false;
          const double denom = beta[i] - z[i];
          if (denom > 0.0) step = std::min(step, beta[i] / denom);
        }
      if (feasible) {
        beta = z;
        break;
      }
      beta += step * (z - beta);
      for (Eigen::Index i = 0; i < n; ++i)
        if (passive[i] && beta[i] <= 1e-15 * (1.0 + std::abs(z[i]))) {
          passive[i] = false;
          beta[i] = 0.0;
        }
    }
  }
  return false;
}

}  // namespace detail

/// Semismooth Newton (primal–dual active set); on cycling or singular steps a primal active-set solve,
/// and forward–backward as the last resort.
inline WeightResult solve_weights_D(const WeightProblemD& p, const Eigen::VectorXd* warm = nullptr,
                                    int max_newton = 100, int max_fb = 200000) {
  const Eigen::Index n = p.eta.size();
  if (p.D.rows() != n || p.D.cols() != n) throw std::invalid_argument("weights: dimension mismatch");
  WeightResult res;
  Eigen::VectorXd c = p.eta;
  c.array() += p.reg;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(n);
  if (warm && warm->size() == n) beta = warm->cwiseMax(0.0);
  if (n == 0) {
    res.beta = beta;
    res.converged = true;
    return res;
  }
  // 0 is optimal when every coordinate slope is nonnegative.
  if (c.minCoeff() >= 0.0) {
    res.beta = Eigen::VectorXd::Zero(n);
    res.converged = true;
    return res;
  }
  const double f0 = 0.0;
  const double scale = std::max(p.D.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  std::set<std::vector<bool>> seen;
  bool fallback = false;
  int it = 0;
  for (; it < max_newton; ++it) {
    const Eigen::VectorXd g = p.D * beta + c;
    if (detail::accuracy_met(nonneg_residual(beta, g), p.accuracy, beta) && objective_D(p, beta) <= f0 + 1e-15) break;
    std::vector<bool> inactive(n);
    std::vector<Eigen::Index> I;
    for (Eigen::Index i = 0; i < n; ++i) {
      inactive[i] = beta[i] - g[i] / scale > 0.0;
      if (inactive[i]) I.push_back(i);
    }
    if (!seen.insert(inactive).second) {
      fallback = true;
      break;
    }
    Eigen::VectorXd next = Eigen::VectorXd::Zero(n);
    if (!I.empty()) {
      Eigen::MatrixXd DI(I.size(), I.size());
      Eigen::VectorXd cI(I.size());
      for (std::size_t a = 0; a < I.size(); ++a) {
        cI[a] = c[I[a]];
        for (std::size_t b = 0; b < I.size(); ++b) DI(a, b) = p.D(I[a], I[b]);
      }
      Eigen::LDLT<Eigen::MatrixXd> ldlt(DI);
      const Eigen::VectorXd d = ldlt.vectorD().cwiseAbs();
      const bool singular = ldlt.info() != Eigen::Success || d.minCoeff() <= 1e-12 * std::max(d.maxCoeff(), 1e-300);
      // Nearly coincident support points make D_II rank deficient; the minimum-norm solution is used then,
      // and the consistency check below decides whether the Newton step is usable.
      const Eigen::VectorXd xI = singular ? Eigen::VectorXd(DI.completeOrthogonalDecomposition().solve(-cI))
                                          : Eigen::VectorXd(ldlt.solve(-cI));
      if (!xI.allFinite() || (DI * xI + cI).cwiseAbs().maxCoeff() > 1e-8 * (1.0 + cI.cwiseAbs().maxCoeff())) {
        fallback = true;
        break;
      }
      for (std::size_t a = 0; a < I.size(); ++a) next[I[a]] = xI[a];
    }
    beta = next;
  }
  if (!fallback) {
    const Eigen::VectorXd g = p.D * beta + c;
    if (!detail::accuracy_met(nonneg_residual(beta, g), p.accuracy, beta) || objective_D(p, beta) > f0 + 1e-15 ||
        beta.minCoeff() < 0.0)
      fallback = true;
  }
  if (fallback) {
    Eigen::VectorXd as;
    int as_it = it;
    if (detail::weights_active_set(p, as, as_it, 20 * static_cast<int>(n) + 50) && objective_D(p, as) <= f0 + 1e-15) {
      res.beta = as;
      res.objective = objective_D(p, as);
      res.residual = residual_D(p, as);
      res.converged = true;
      res.used_fallback = true;
      res.iterations = as_it;
      return res;
    }
    Eigen::VectorXd start = beta.cwiseMax(0.0);
    if (objective_D(p, start) > f0) start.setZero();
    return detail::weights_fb(p, start, max_fb, it);
  }
  res.beta = beta;
  res.objective = objective_D(p, beta);
  res.residual = residual_D(p, beta);
  res.converged = true;
  res.iterations = it;
  return res;
}

inline double objective_radon(const WeightProblemRadon& p, const Eigen::VectorXd& b) {
  const double t = (b - p.alpha).lpNorm<1>();
  return 0.5 * t * t + p.eta.dot(b) + p.reg * b.lpNorm<1>();
}

/// Exact inf_{g∈∂f(β)}‖g‖_∞ for the ℓ1²-problem: coordinatewise distance of 0 to t·S_i + η_i + reg + N_i.
inline double residual_radon(const WeightProblemRadon& p, const Eigen::VectorXd& b) {
  const double t = (b - p.alpha).lpNorm<1>();
  double r = 0.0;
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    const double base = p.eta[i] + p.reg;
    const double d = b[i] - p.alpha[i];
    // Interval [lo, hi] of t·S_i + base.
    double lo, hi;
    if (d > 0) {
      lo = hi = base + t;
    } else if (d < 0) {
      lo = hi = base - t;
    } else {
      lo = base - t;
      hi = base + t;
    }
    if (b[i] <= 0.0) lo = -std::numeric_limits<double>::infinity();  // normal cone (−∞, 0]
    const double dist = (lo <= 0.0 && 0.0 <= hi) ? 0.0 : std::min(std::abs(lo), std::abs(hi));
    r = std::max(r, dist);
  }
  return r;
}

/// Exact prox: argmin_β ½‖β − α‖₁² + c‖β‖₁ + δ_{≥0}(β) + (1/2σ)‖β − z‖².
/// For fixed t = ‖β − α‖₁ the problem separates into shrinkage towards α; t solves t = φ(t)
/// with φ nonincreasing and piecewise linear, located by bisection over its sorted breakpoints.
inline Eigen::VectorXd prox_l1sq_l1_pos(const Eigen::VectorXd& alpha, const Eigen::VectorXd& z, double sigma,
                                        double c) {
  if (!(sigma > 0)) throw std::invalid_argument("prox: sigma must be positive");
  const Eigen::Index n = z.size();
  Eigen::VectorXd u = z.array() - sigma * c;
  auto coord = [&](Eigen::Index i, double t) {
    const double e = u[i] - alpha[i];
    const double shrink = e > 0 ? std::max(e - sigma * t, 0.0) : -std::max(-e - sigma * t, 0.0);
    return std::max(0.0, alpha[i] + shrink);
  };
  auto phi = [&](double t) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += std::abs(coord(i, t) - alpha[i]);
    return s;
  };
  std::vector<double> bp{0.0};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double e = std::abs(u[i] - alpha[i]) / sigma;
    const double v = std::abs(u[i]) / sigma;
    if (e > 0) bp.push_back(e);
    if (v > 0) bp.push_back(v);
  }
  std::sort(bp.begin(), bp.end());
  bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
  auto h = [&](double t) { return t - phi(t); };
  double t;
  if (h(bp.back()) <= 0.0) {
    // φ is constant beyond the last breakpoint.
    t = phi(bp.back());
  } else {
    std::size_t lo = 0, hi = bp.size() - 1;  // h(bp[lo]) ≤ 0 < h(bp[hi])
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      if (h(bp[mid]) <= 0.0) lo = mid;
      else hi = mid;
    }
    const double t0 = bp[lo], t1 = bp[hi], h0 = h(t0), h1 = h(t1);
    t = t0 - h0 * (t1 - t0) / (h1 - h0);
    t = std::clamp(t, t0, t1);
  }
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = coord(i, t);
  return out;
}

/// Proximal-point iteration β ← prox_{σf}(β) expressed through prox_l1sq_l1_pos, with σ grown geometrically.
inline WeightResult solve_weights_radon(const WeightProblemRadon& p, const Eigen::VectorXd* warm = nullptr,
                                        int max_iter = 500) {
  const Eigen::Index n = p.eta.size();
  if (p.alpha.size() != n) throw std::invalid_argument("weights: dimension mismatch");
  if (n && p.alpha.minCoeff() < 0.0) throw std::invalid_argument("weights: alpha must be nonnegative");
  WeightResult res;
  Eigen::VectorXd beta = (warm && warm->size() == n) ? Eigen::VectorXd(warm->cwiseMax(0.0)) : p.alpha;
  // σ·|η| is capped so that the shifted prox argument keeps ~1e-10 absolute precision.
  const double slope = 1.0 + (n ? p.eta.cwiseAbs().maxCoeff() : 0.0) + p.reg;
  const double sigma_max = 1e6 / slope;
  double sigma = std::min(1.0, sigma_max);
  int it = 0;
  for (; it < max_iter; ++it) {
    if (detail::accuracy_met(residual_radon(p, beta), p.accuracy, beta)) break;
    beta = prox_l1sq_l1_pos(p.alpha, beta - sigma * p.eta, sigma, p.reg);
    sigma = std::min(sigma * 10.0, sigma_max);
  }
  res.beta = beta;
  res.objective = objective_radon(p, beta);
  res.residual = residual_radon(p, beta);
  res.converged = detail::accuracy_met(res.residual, p.accuracy, beta);
  res.iterations = it;
  return res;
}

}  // namespace ps
