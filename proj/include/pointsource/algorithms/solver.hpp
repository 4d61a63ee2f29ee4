#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "pointsource/algorithms/config.hpp"
#include "pointsource/algorithms/insertion.hpp"
#include "pointsource/algorithms/merge.hpp"
#include "pointsource/algorithms/problem.hpp"
#include "pointsource/algorithms/transport.hpp"
#include "pointsource/inner/bnb.hpp"
#include "pointsource/inner/weights.hpp"
#include "pointsource/util/timing.hpp"

namespace ps {

template <int Dim>
struct SolverState {
  DiscreteMeasure<Dim> mu{MeasureMode::Nonnegative};
  TransportPlan<Dim> gamma;
  std::vector<double> z;  ///< background (biased problem)
  std::vector<double> y;  ///< dual variable: TV dual (biased) or data dual (μPDPS)
  int k = 0;
};

/// Per-iteration log entry. cpu/wall are cumulative seconds since the solver was constructed.
struct IterationRecord {
  int k = 0;
  double value = 0.0;
  std::size_t spikes = 0;
  int inner_iterations = 0;
  int insertions = 0;
  int inner_loops = 0;
  double gamma_norm = 0.0;
  int curvature_retries = 0;
  int convexity_retries = 0;
  int support_drops = 0;
  bool inner_budget_exceeded = false;
  double eps = 0.0;
  double eps_bar = 0.0;
  double theta = 0.0;
  double ell_F = 0.0;
  double c_check = std::numeric_limits<double>::quiet_NaN();  ///< Č of the quasi-monotonicity bound
  double delta_v = 0.0;                                       ///< v(μᵏ⁺¹) − v(μᵏ)
  bool certified = true;
  int merges = 0;
  double cpu = 0.0;
  double wall = 0.0;
};

template <int Dim>
class Solver {
public:
  Solver(const Problem<Dim>& problem, Method method, StepConfig config, ModelConstants constants,
         WorkerPool* pool = nullptr)
      : problem_(&problem),
        method_(method),
        config_(config),
        constants_(constants),
        pool_(pool),
        grad_(problem.model->grid().counts) {
    if (method_biased(method) != problem.biased)
      throw std::invalid_argument("solver: method " + to_string(method) + " does not match the problem type");
    steps_ = resolve_steps(method, config, constants, Dim);
    const double tau_sched = method == Method::FWf ? 1.0 : steps_.tau;
    tolerance_.base = tau_sched * problem.alpha;
    tolerance_.bootstrap = config.bootstrap;
    const std::size_t m = problem.model->sensors();
    if (problem.biased) {
      state_.z.assign(m, 0.0);
      state_.y.assign(grad_.dual_size(), 0.0);
    } else if (method == Method::MuPDPS) {
      state_.y = problem.residual(state_.mu, {}, pool_);
    }
    value_ = current_value();
    cpu0_ = process_cpu_seconds();
    wall0_ = wall_seconds();
  }

  const ResolvedSteps& steps() const { return steps_; }
  const StepConfig& config() const { return config_; }
  const ToleranceSchedule& tolerance() const { return tolerance_; }
  const SolverState<Dim>& state() const { return state_; }
  Method method() const { return method_; }
  double value() const { return value_; }

  void set_observer(InsertionObserver<Dim> obs) { observer_ = std::move(obs); }
  /// Keeps μ at its current value; only the auxiliary variables are updated.
  void freeze_measure(bool on) { frozen_ = on; }

  double current_value() const {
    return problem_->biased ? problem_->value(state_.mu, state_.z, pool_) : problem_->value(state_.mu, {}, pool_);
  }

  IterationRecord step() {
    IterationRecord rec;
    rec.k = state_.k + 1;
    rec.eps = tolerance_(rec.k);
    const double v_before = value_;
    const double mass_before = radon_norm(state_.mu);
    switch (method_) {
      case Method::MuFB:
      case Method::SFB:
      case Method::RadonFB:
      case Method::RadonSFB:
      case Method::SPDPS:
      case Method::FPDPS:
      case Method::RadonSPDPS:
      case Method::RadonFPDPS: sliding_step(rec); break;
      case Method::MuPDPS: mu_pdps_step(rec); break;
      case Method::FWf: fw_step(rec); break;
    }
    state_.k = rec.k;
    value_ = current_value();
    rec.value = value_;
    rec.delta_v = value_ - v_before;
    rec.spikes = state_.mu.size();
    rec.gamma_norm = state_.gamma.mass_norm();
    if (method_fb_family(method_) || method_biased(method_)) rec.c_check = quasi_monotone_constant(rec, mass_before);
    rec.cpu = process_cpu_seconds() - cpu0_;
    rec.wall = wall_seconds() - wall0_;
    return rec;
  }

  /// Final clean-up merging with the last tolerance as gate.
  int cleanup(MergePolicy policy = MergePolicy::interpolate(0.01)) {
    if (frozen_) return 0;
    MergeStats st;
    const double gate = tolerance_(std::max(1, state_.k)) / steps_.tau;
    state_.mu = merge_spikes<Dim>(state_.mu, policy, value_fn(), gate, &st);
    value_ = current_value();
    return st.accepted;
  }

private:
  std::function<double(const DiscreteMeasure<Dim>&)> value_fn() const {
    return [this](const DiscreteMeasure<Dim>& m) {
      return problem_->biased ? problem_->value(m, state_.z, pool_) : problem_->value(m, {}, pool_);
    };
  }

  InsertionSettings<Dim> insertion_settings(int k) const {
    InsertionSettings<Dim> s;
    s.model = problem_->model;
    s.pool = pool_;
    s.kappa = config_.kappa;
    s.bootstrap = k <= tolerance_.bootstrap;
    s.observer = observer_ ? &observer_ : nullptr;
    return s;
  }

  DiscreteMeasure<Dim> insert(const DiscreteMeasure<Dim>& mu_check, const std::vector<double>& r, double eps, int k,
                              IterationRecord& rec) {
    InsertionStats st;
    const auto s = insertion_settings(k);
    DiscreteMeasure<Dim> out =
        method_radon(method_) ? insert_and_adjust_radon<Dim>(mu_check, r, problem_->alpha, steps_.tau, eps, s, &st)
                              : insert_and_adjust<Dim>(mu_check, r, problem_->alpha, steps_.tau, eps, s, &st);
    rec.inner_iterations += st.weight_iterations;
    rec.insertions += st.insertions;
    rec.certified = rec.certified && (st.certified || st.bootstrap);
    return out;
  }

  double ell_F(const std::vector<double>& r) const {
    return std::sqrt(2.0 * constants_.N_psi) * constants_.L_grad_psi * norm2(r);
  }

  /// Forward-backward and primal-dual family with optional sliding (transport) step.
  void sliding_step(IterationRecord& rec) {
    const ForwardModel<Dim>& A = *problem_->model;
    const Domain<Dim>& dom = A.domain();
    const double diam = dom.diameter();
    const double tau = steps_.tau;
    const bool biased = problem_->biased;
    const std::vector<double>& z = state_.z;
    const std::vector<double> r = problem_->residual(state_.mu, biased ? z : std::vector<double>{}, pool_);

    TransportPlan<Dim> gamma;
    if (steps_.theta0 > 0 && !frozen_ && !state_.mu.empty()) {
      rec.ell_F = ell_F(r);
      const double ell = steps_.ell_0 + rec.ell_F + config_.ell_r;
      rec.theta = ell > 0 ? steps_.theta0 / (tau * ell) : 0.0;
      auto v = [&](const Point<Dim>& x) { return A.preadjoint(r, x); };
      auto gv = [&](const Point<Dim>& x) { return A.preadjoint_grad(r, x); };
      gamma = transport_step<Dim>(state_.mu, gv, rec.theta * tau, dom);
      CurvatureReport cr;
      gamma = curvature_control<Dim>(std::move(gamma), v, gv, rec.ell_F, &cr);
      rec.curvature_retries = cr.retries;
    }

    std::vector<double> z_next = z;
    DiscreteMeasure<Dim> mu_next = state_.mu;
    const int max_loops = 50;
    for (int loop = 0;; ++loop) {
      ++rec.inner_loops;
      const DiscreteMeasure<Dim> mu_check = transported_measure(state_.mu, gamma, diam);
      std::vector<double> r_check;
      if (biased) {
        // z⁺ = z − σ_p(Aμ̌ + z − b + ∇_hᵀy); v̌ = A_*(Aμ̌ + z⁺ − b).
        const auto rz = problem_->residual(mu_check, z, pool_);
        const auto ky = grad_.adjoint(state_.y);
        for (std::size_t i = 0; i < z.size(); ++i) z_next[i] = z[i] - steps_.sigma_p * (rz[i] + ky[i]);
        r_check = problem_->residual(mu_check, z_next, pool_);
      } else {
        r_check = problem_->residual(mu_check, {}, pool_);
      }
      if (frozen_) {
        mu_next = state_.mu;
        break;
      }
      const double g = gamma.mass_norm();
      rec.eps_bar = g > 0 ? std::min(rec.eps, config_.tighten_c * rec.eps * rec.eps / g) : rec.eps;
      mu_next = insert(mu_check, r_check, config_.kappa * rec.eps_bar, rec.k, rec);

      bool changed = false;
      // Plan atoms whose target left the support are dropped.
      TransportPlan<Dim> kept;
      for (const auto& a : gamma.atoms()) {
        if (mu_next.weight_at(a.target, 1e-12 * diam) == 0.0) {
          ++rec.support_drops;
          changed = true;
        } else {
          kept.atoms().push_back(a);
        }
      }
      gamma = std::move(kept);
      if (!gamma.empty() && !convexity_ok<Dim>(gamma, mu_next, mu_check, config_.c_con, rec.eps, diam)) {
        // Halve as many times as the current violation ratio requires before re-running the insertion.
        const double ratio =
            gamma.mass_norm() * radon_norm(mu_next - mu_check, diam) / std::max(config_.c_con * rec.eps, 1e-300);
        const int halvings = std::max(1, static_cast<int>(std::ceil(std::log2(ratio))));
        rec.convexity_retries += halvings;
        gamma = halvings > 60 ? TransportPlan<Dim>() : gamma.scaled(std::ldexp(1.0, -halvings));
        changed = true;
      }
      if (!changed) break;
      if (loop + 1 >= max_loops && !gamma.empty()) {
        rec.inner_budget_exceeded = true;
        gamma = TransportPlan<Dim>();
      }
    }
    state_.gamma = gamma;
    state_.mu = mu_next.prune(diam);

    if (config_.merge.kind != MergePolicy::Kind::None && !frozen_) {
      MergeStats st;
      if (biased) {
        const std::vector<double> zz = z_next;
        state_.mu = merge_spikes<Dim>(
            state_.mu, config_.merge, [&](const DiscreteMeasure<Dim>& m) { return problem_->value(m, zz, pool_); },
            rec.eps / tau, &st);
      } else {
        state_.mu = merge_spikes<Dim>(state_.mu, config_.merge, value_fn(), rec.eps / tau, &st);
      }
      rec.merges = st.accepted;
    }

    if (biased) {
      // y⁺ = proj_λ(y + σ_d∇_h(2z⁺ − z))
      std::vector<double> zbar(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) zbar[i] = 2.0 * z_next[i] - z[i];
      const auto gz = grad_.apply(zbar);
      for (std::size_t i = 0; i < state_.y.size(); ++i) state_.y[i] += steps_.sigma_d * gz[i];
      grad_.project(state_.y, problem_->lambda);
      state_.z = std::move(z_next);
    }
  }

  void mu_pdps_step(IterationRecord& rec) {
    const ForwardModel<Dim>& A = *problem_->model;
    const double diam = A.domain().diameter();
    const DiscreteMeasure<Dim> mu_old = state_.mu;
    rec.eps_bar = rec.eps;
    DiscreteMeasure<Dim> mu_next = insert(state_.mu, state_.y, config_.kappa * rec.eps, rec.k, rec);
    mu_next.prune(diam);
    ++rec.inner_loops;
    MergeStats st;
    mu_next = merge_spikes<Dim>(mu_next, config_.merge, value_fn(), rec.eps / steps_.tau, &st);
    rec.merges = st.accepted;
    // y⁺ = (y + σA(2μ⁺ − μ) − σb)/(1 + σ)
    const auto a_new = A.apply(mu_next, pool_);
    const auto a_old = A.apply(mu_old, pool_);
    const double s = steps_.sigma;
    for (std::size_t i = 0; i < state_.y.size(); ++i)
      state_.y[i] = (state_.y[i] + s * (2.0 * a_new[i] - a_old[i]) - s * problem_->b[i]) / (1.0 + s);
    state_.mu = std::move(mu_next);
  }

  /// Fully corrective conditional gradient: linear minimisation oracle by branch-and-bound, then
  /// re-optimisation of all weights on the enlarged support.
  void fw_step(IterationRecord& rec) {
    const ForwardModel<Dim>& A = *problem_->model;
    const double diam = A.domain().diameter();
    rec.eps_bar = rec.eps;
    ++rec.inner_loops;
    const auto r = problem_->residual(state_.mu, {}, pool_);
    std::vector<const Kernel<Dim>*> ks{&A.phi()};
    CertificateFunction<Dim> f(ks, A.preadjoint_bumps(r, 1.0, 0), 0.0);
    BnBTask<Dim> task;
    task.objective = &f;
    task.box = A.domain();
    task.tolerance = 0.25 * config_.kappa * rec.eps;
    const auto br = bnb_minimize(task, pool_);
    std::vector<Point<Dim>> S;
    std::vector<double> warm;
    for (const auto& s : state_.mu.spikes()) {
      S.push_back(s.x);
      warm.push_back(s.w);
    }
    if (br.value < -problem_->alpha && !detail::near_any<Dim>(S, br.x, 1e-12 * diam)) {
      S.push_back(br.x);
      warm.push_back(0.0);
      ++rec.insertions;
    }
    const Eigen::Index n = static_cast<Eigen::Index>(S.size());
    const std::size_t m = A.sensors();
    Eigen::MatrixXd Phi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), n);
    for (Eigen::Index j = 0; j < n; ++j)
      A.for_sensors_near(S[j], [&](std::size_t i) { Phi(static_cast<Eigen::Index>(i), j) = A.phi()(S[j] - A.grid().center(i)); });
    Eigen::Map<const Eigen::VectorXd> b(problem_->b.data(), static_cast<Eigen::Index>(m));
    WeightProblemD p{Phi.transpose() * Phi, -(Phi.transpose() * b), problem_->alpha, config_.kappa * rec.eps};
    Eigen::VectorXd w0(n);
    for (Eigen::Index j = 0; j < n; ++j) w0[j] = warm[j];
    const auto wr = solve_weights_D(p, &w0);
    rec.inner_iterations += wr.iterations;
    rec.certified = wr.converged;
    DiscreteMeasure<Dim> mu(MeasureMode::Nonnegative);
    for (Eigen::Index j = 0; j < n; ++j)
      if (wr.beta[j] > 0.0) mu.add(S[j], wr.beta[j]);
    MergeStats st;
    state_.mu = merge_spikes<Dim>(mu, config_.merge, value_fn(), rec.eps, &st);
    rec.merges = st.accepted;
  }

  /// Č = (‖μᵏ‖ + ‖μᵏ⁺¹‖ + ‖γ‖ + 1 + C′ + C_con)/τ + C_cur.
  /// C′ and C_con bound the transport-induced inexactness through the gradient Lipschitz factor
  /// L_∇M = L_∇ρ + τ√(2N)·M_φ·L_∇φ; C_cur = Θ_F²‖γ‖|γ|(c₂)/(2ε) bounds the data-term curvature of the move.
  double quasi_monotone_constant(const IterationRecord& rec, double mass_before) const {
    const double tau = steps_.tau;
    const double mass_after = radon_norm(state_.mu);
    const double g = state_.gamma.mass_norm();
    double c = mass_before + mass_after + g + 1.0;
    double c_cur = 0.0;
    if (method_sliding(method_) && g > 0) {
      const double diam = problem_->domain().diameter();
      const double lip_grad_m = problem_->model->rho().lipschitz_grad() +
                                tau * std::sqrt(2.0 * constants_.N_psi) * constants_.M_psi * constants_.L_grad_psi;
      const double lip_grad_g = lip_grad_m * (mass_before + mass_after + g);
      c += 2.0 * (1.0 + diam * std::sqrt(g * lip_grad_g));
      c += config_.c_con * 0.5 * lip_grad_m * diam * diam;
      c_cur = constants_.Theta_F * constants_.Theta_F * g * state_.gamma.c2_cost() / (2.0 * rec.eps);
    }
    return c / tau + c_cur;
  }

  const Problem<Dim>* problem_;
  Method method_;
  StepConfig config_;
  ModelConstants constants_;
  WorkerPool* pool_;
  GridGradient<Dim> grad_;
  ResolvedSteps steps_;
  ToleranceSchedule tolerance_;
  SolverState<Dim> state_;
  InsertionObserver<Dim> observer_;
  bool frozen_ = false;
  double value_ = 0.0;
  double cpu0_ = 0.0;
  double wall0_ = 0.0;
};

}  // namespace ps
