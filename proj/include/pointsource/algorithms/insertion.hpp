#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

#include "pointsource/core/measure.hpp"
#include "pointsource/inner/bnb.hpp"
#include "pointsource/inner/weights.hpp"
#include "pointsource/kernels/certificate.hpp"
#include "pointsource/model/forward_model.hpp"

namespace ps {

/// Snapshot handed to an observer after each insertion call.
/// The certificate is f + tau_alpha + radon_t ≥ −eps over Ω, with f = τv̌ + 𝒟(μ − μ̌) for the
/// 𝒟 variant and f = τv̌ for the Radon variant (radon_t = ‖β − α‖₁ there, 0 otherwise).
template <int Dim>
struct InsertionRecord {
  CertificateFunction<Dim> f;
  double tau_alpha = 0.0;
  double radon_t = 0.0;
  double eps = 0.0;
  bool radon = false;
  bool certified = false;
  bool bootstrap = false;
  DiscreteMeasure<Dim> mu;
  DiscreteMeasure<Dim> mu_check;
  Eigen::VectorXd eta;
  Eigen::MatrixXd D;
  double kappa_eps = 0.0;  ///< weight accuracy used for the subproblem
};

template <int Dim>
using InsertionObserver = std::function<void(const InsertionRecord<Dim>&)>;

struct InsertionStats {
  int weight_iterations = 0;
  int insertions = 0;
  int bnb_calls = 0;
  std::size_t bnb_boxes = 0;
  bool certified = false;
  bool bootstrap = false;
  bool budget_exhausted = false;
  bool weight_fallback = false;
  double certificate_bound = 0.0;  ///< certified lower bound of the certificate function at exit
};

template <int Dim>
struct InsertionSettings {
  const ForwardModel<Dim>* model = nullptr;
  WorkerPool* pool = nullptr;
  double kappa = 0.5;
  bool bootstrap = false;  ///< insert at most one point irrespective of the tolerance
  int max_insertions = 100;
  std::size_t bnb_budget = 2000000;
  const InsertionObserver<Dim>* observer = nullptr;
};

namespace detail {

template <int Dim>
std::vector<const Kernel<Dim>*> certificate_kernels(const ForwardModel<Dim>& m) {
  return {&m.phi(), &m.rho()};
}

template <int Dim>
std::vector<typename CertificateFunction<Dim>::Bump> dual_bumps(const ForwardModel<Dim>& m,
                                                               const std::vector<double>& r, double tau) {
  return m.preadjoint_bumps(r, tau, 0);
}

template <int Dim>
void append_measure_bumps(std::vector<typename CertificateFunction<Dim>::Bump>& bumps, const DiscreteMeasure<Dim>& mu,
                          double sign) {
  for (const auto& s : mu.spikes())
    if (s.w != 0.0) bumps.push_back({s.x, sign * s.w, 1});
}

template <int Dim>
bool near_any(const std::vector<Point<Dim>>& S, const Point<Dim>& x, double tol) {
  for (const auto& p : S)
    if (norm<Dim>(p - x) <= tol) return true;
  return false;
}

}  // namespace detail

/// Point insertion and weight adjustment with 𝒟-marginal term.
/// v̌ = A_*r is given through the sensor-space vector r. Returns μ with nonnegative weights such that
/// min_Ω τv̌ + τα + 𝒟(μ − μ̌) ≥ −ε is certified by branch-and-bound (unless bootstrapping or out of budget).
template <int Dim>
DiscreteMeasure<Dim> insert_and_adjust(const DiscreteMeasure<Dim>& mu_check, const std::vector<double>& r, double alpha,
                                       double tau, double eps, const InsertionSettings<Dim>& cfg,
                                       InsertionStats* stats_out = nullptr) {
  const ForwardModel<Dim>& model = *cfg.model;
  const Kernel<Dim>& rho = model.rho();
  const double diam = model.domain().diameter();
  const double tau_alpha = tau * alpha;
  InsertionStats stats;
  stats.bootstrap = cfg.bootstrap;

  const DiscreteMeasure<Dim> mc = mu_check.pruned(diam);
  std::vector<Point<Dim>> S;
  std::vector<double> warm;
  for (const auto& s : mc.spikes()) {
    S.push_back(s.x);
    warm.push_back(std::max(0.0, s.w));
  }

  auto base = detail::dual_bumps(model, r, tau);
  detail::append_measure_bumps(base, mc, -1.0);
  const auto kernels = detail::certificate_kernels(model);

  // η_x = τv̌(x) − 𝒟μ̌(x), cached per support point.
  std::vector<double> eta_cache;
  auto eta_at = [&](const Point<Dim>& x) { return tau * model.preadjoint(r, x) - apply_D<Dim>(mc, rho, x); };
  for (const auto& x : S) eta_cache.push_back(eta_at(x));

  const double bnb_tol = 0.25 * eps;
  DiscreteMeasure<Dim> mu(MeasureMode::Nonnegative);
  Eigen::VectorXd eta, beta;
  Eigen::MatrixXd D;
  CertificateFunction<Dim> f;
  for (;;) {
    const Eigen::Index n = static_cast<Eigen::Index>(S.size());
    D.resize(n, n);
    eta.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      eta[i] = eta_cache[i];
      for (Eigen::Index j = 0; j <= i; ++j) D(i, j) = D(j, i) = rho(S[i] - S[j]);
    }
    WeightProblemD p{D, eta, tau_alpha, cfg.kappa * eps};
    Eigen::VectorXd w0(n);
    for (Eigen::Index i = 0; i < n; ++i) w0[i] = warm[i];
    const WeightResult wr = solve_weights_D(p, &w0);
    stats.weight_iterations += wr.iterations;
    stats.weight_fallback = stats.weight_fallback || wr.used_fallback;
    beta = wr.beta;
    for (Eigen::Index i = 0; i < n; ++i) warm[i] = beta[i];

    mu = DiscreteMeasure<Dim>(MeasureMode::Nonnegative);
    for (Eigen::Index i = 0; i < n; ++i)
      if (beta[i] > 0.0) mu.add(S[i], beta[i]);

    auto bumps = base;
    detail::append_measure_bumps(bumps, mu, 1.0);
    f = CertificateFunction<Dim>(kernels, std::move(bumps), 0.0);

    if (cfg.bootstrap && stats.insertions >= 1) break;

    BnBTask<Dim> task;
    task.objective = &f;
    task.box = model.domain();
    task.tolerance = bnb_tol;
    task.max_boxes = cfg.bnb_budget;
    const BnBResult<Dim> br = bnb_minimize(task, cfg.pool);
    ++stats.bnb_calls;
    stats.bnb_boxes += br.boxes;
    stats.certificate_bound = br.lower_bound + tau_alpha;
    // Stopping at −(ε − tol) leaves room for the branch-and-bound gap, so the true minimum is ≥ −ε.
    if (br.converged && br.value + tau_alpha >= -(eps - bnb_tol)) {
      stats.certified = true;
      break;
    }
    if (detail::near_any<Dim>(S, br.x, 1e-12 * diam) || stats.insertions >= cfg.max_insertions) {
      stats.budget_exhausted = true;
      break;
    }
    S.push_back(br.x);
    warm.push_back(0.0);
    eta_cache.push_back(eta_at(br.x));
    ++stats.insertions;
  }

  if (cfg.observer && *cfg.observer) {
    InsertionRecord<Dim> rec;
    rec.f = f;
    rec.tau_alpha = tau_alpha;
    rec.eps = eps;
    rec.radon = false;
    rec.certified = stats.certified;
    rec.bootstrap = cfg.bootstrap;
    rec.mu = mu;
    rec.mu_check = mc;
    rec.eta = eta;
    rec.D = D;
    rec.kappa_eps = cfg.kappa * eps;
    (*cfg.observer)(rec);
  }
  if (stats_out) *stats_out = stats;
  return mu;
}

/// Point insertion and weight adjustment with squared-Radon marginal term: one candidate x̄ minimising v̌,
/// then the ℓ1²-weight subproblem on supp μ̌ ∪ {x̄}.
template <int Dim>
DiscreteMeasure<Dim> insert_and_adjust_radon(const DiscreteMeasure<Dim>& mu_check, const std::vector<double>& r,
                                             double alpha, double tau, double eps, const InsertionSettings<Dim>& cfg,
                                             InsertionStats* stats_out = nullptr) {
  const ForwardModel<Dim>& model = *cfg.model;
  const double diam = model.domain().diameter();
  const double tau_alpha = tau * alpha;
  InsertionStats stats;
  stats.bootstrap = cfg.bootstrap;

  const DiscreteMeasure<Dim> mc = mu_check.pruned(diam);
  const auto kernels = detail::certificate_kernels(model);
  CertificateFunction<Dim> f(kernels, detail::dual_bumps(model, r, tau), 0.0);

  const double bnb_tol = 0.25 * eps;
  BnBTask<Dim> task;
  task.objective = &f;
  task.box = model.domain();
  task.tolerance = bnb_tol;
  task.max_boxes = cfg.bnb_budget;
  const BnBResult<Dim> br = bnb_minimize(task, cfg.pool);
  ++stats.bnb_calls;
  stats.bnb_boxes += br.boxes;

  std::vector<Point<Dim>> S;
  std::vector<double> a;
  for (const auto& s : mc.spikes()) {
    S.push_back(s.x);
    a.push_back(std::max(0.0, s.w));
  }
  if (!detail::near_any<Dim>(S, br.x, 1e-12 * diam)) {
    S.push_back(br.x);
    a.push_back(0.0);
    ++stats.insertions;
  }
  const Eigen::Index n = static_cast<Eigen::Index>(S.size());
  WeightProblemRadon p;
  p.alpha.resize(n);
  p.eta.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    p.alpha[i] = a[i];
    p.eta[i] = f(S[i]);
  }
  p.reg = tau_alpha;
  p.accuracy = cfg.kappa * eps;
  const WeightResult wr = solve_weights_radon(p);
  stats.weight_iterations += wr.iterations;

  DiscreteMeasure<Dim> mu(MeasureMode::Nonnegative);
  for (Eigen::Index i = 0; i < n; ++i)
    if (wr.beta[i] > 0.0) mu.add(S[i], wr.beta[i]);
  const double t = (wr.beta - p.alpha).lpNorm<1>();
  stats.certificate_bound = br.lower_bound + tau_alpha + t;
  stats.certified = br.converged && wr.converged && br.value + tau_alpha + t >= -(eps - bnb_tol);

  if (cfg.observer && *cfg.observer) {
    InsertionRecord<Dim> rec;
    rec.f = f;
    rec.tau_alpha = tau_alpha;
    rec.radon_t = t;
    rec.eps = eps;
    rec.radon = true;
    rec.certified = stats.certified;
    rec.bootstrap = cfg.bootstrap;
    rec.mu = mu;
    rec.mu_check = mc;
    rec.eta = p.eta;
    rec.kappa_eps = cfg.kappa * eps;
    (*cfg.observer)(rec);
  }
  if (stats_out) *stats_out = stats;
  return mu;
}

}  // namespace ps
