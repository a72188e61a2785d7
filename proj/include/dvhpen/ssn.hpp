#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "dvhpen/dose.hpp"
#include "dvhpen/errors.hpp"
#include "dvhpen/grid.hpp"
#include "dvhpen/heat.hpp"
#include "dvhpen/krylov.hpp"
#include "dvhpen/penalty.hpp"

namespace dvhpen {

/// Everything that is fixed across a homotopy: the PDE, the two dose regions
/// and the tracking target z.
struct DoseProblem {
  HeatModel model;
  Region target; ///< omega_T
  Region risk;   ///< omega_R
  SpaceTimeArray z;

  DoseProblem(HeatModel m, Region target_region, Region risk_region)
      : model(std::move(m)), target(std::move(target_region)), risk(std::move(risk_region)),
        z(model.grid()) {}
  DoseProblem(HeatModel m, Region target_region, Region risk_region, SpaceTimeArray desired)
      : model(std::move(m)), target(std::move(target_region)), risk(std::move(risk_region)),
        z(std::move(desired)) {
    require_conforms(z, model.grid(), "problem: desired state");
  }

  const SpaceTimeGrid &grid() const { return model.grid(); }
};

struct SsnSettings {
  int max_iters = 100;
  double residual_tol = 1e-6;
  int krylov_max_iters = 3000;
  double krylov_tol = 1e-10;
  int ls_max_backtracks = 30;
  double ls_factor = 0.5;
  /// Consecutive accepted steps allowed to leave ||T|| unchanged; after that
  /// the line search demands a strict decrease. Breaks the exact two-cycle
  /// between saturated iterates that a purely non-strict test accepts forever.
  int ls_max_stalls = 2;

  void validate() const {
    if (max_iters <= 0 || krylov_max_iters <= 0 || ls_max_backtracks < 0 || ls_max_stalls < 0)
      throw ConfigError("solver: iteration limits must be positive");
    if (!(residual_tol > 0.0) || !(krylov_tol > 0.0))
      throw ConfigError("solver: tolerances must be positive");
    if (!(ls_factor > 0.0 && ls_factor < 1.0))
      throw ConfigError("solver: ls_factor must lie in (0,1)");
  }

  friend bool operator==(const SsnSettings &, const SsnSettings &) = default;
};

struct SsnStep {
  int k = 0;
  double tau = 0.0;
  double residual = 0.0; ///< ||T(u^k)|| after the step
  int krylov_iters = 0;
};

struct SsnTrace {
  double initial_residual = 0.0;
  std::vector<SsnStep> steps;
  bool converged = false;

  int iterations() const { return static_cast<int>(steps.size()); }
  double final_residual() const {
    return steps.empty() ? initial_residual : steps.back().residual;
  }
};

/// Problem/config pair shared by the concrete formulations, with the
/// projected residual T(u) = u - proj_Vad(-F) on the control mask.
class FormulationBase {
public:
  FormulationBase(const DoseProblem &problem, PenaltyConfig cfg)
      : problem_(&problem), cfg_(cfg) {}

  const DoseProblem &problem() const { return *problem_; }
  const PenaltyConfig &config() const { return cfg_; }

  ControlField projected_residual(const ControlField &u, const ControlField &F) const {
    const auto &ctrl = problem_->model.control_region();
    ControlField T(problem_->grid());
    for (int k = 0; k < T.nt(); ++k)
      for (int i : ctrl.indices())
        T(k, i) = u(k, i) - project_admissible(-F(k, i), cfg_.u_min, cfg_.u_max);
    return T;
  }

  double projected_residual_norm(const ControlField &u, const ControlField &F) const {
    return norm_V(projected_residual(u, F), problem_->model);
  }

protected:
  template <typename Fn> static double integrate(const DoseField &d, Fn f) {
    const auto &w = d.region.weights();
    double s = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j)
      s += w[j] * f(d.values[j]);
    return s;
  }

  // src += diag(w) C dy, pushed back through C*.
  void add_weighted_dose(const DoseField &w, const StateField &dy, SpaceTimeArray &src) const {
    bool any = false;
    for (double v : w.values)
      any = any || v != 0.0;
    if (!any)
      return;
    DoseField d = apply_C(w.region, dy, problem_->grid());
    for (std::size_t j = 0; j < d.values.size(); ++j)
      d.values[j] *= w.values[j];
    add_C_adjoint(1.0, d, src);
  }

  const DoseProblem *problem_;
  PenaltyConfig cfg_;
};

/// Dose-penalized problem with Moreau-Yosida regularized L1 terms.
///
/// F(u) = S0*( alpha (Su - z) + beta2 C_R* H+(C_R Su) + beta1 C_T* H-(C_T Su) ),
/// the gradient of the regularized energy minus u.
class DosePenalty : public FormulationBase {
public:
  struct Point {
    ControlField F;
    StateField y;
    DoseField dose_target;
    DoseField dose_risk;
  };

  /// Newton-derivative data frozen at u^k: per-node (beta/gamma) chi weights.
  struct Linearization {
    DoseField weight_target;
    DoseField weight_risk;
  };

  DosePenalty(const DoseProblem &problem, PenaltyConfig cfg) : FormulationBase(problem, cfg) {
    cfg_.validate();
  }

  Point evaluate(const ControlField &u) const {
    const auto &g = problem_->grid();
    Point p;
    p.y = solve_state(problem_->model, u);
    p.dose_target = apply_C(problem_->target, p.y, g);
    p.dose_risk = apply_C(problem_->risk, p.y, g);

    DoseField mu_t = p.dose_target;
    for (double &v : mu_t.values)
      v = my_minus(v, cfg_.U, cfg_.gamma);
    DoseField mu_r = p.dose_risk;
    for (double &v : mu_r.values)
      v = my_plus(v, cfg_.L, cfg_.gamma);
    p.F = problem_->model.adjoint_sweep(adjoint_source(p.y, mu_t, mu_r));
    return p;
  }

  Linearization linearize(const Point &p) const {
    Linearization lin{p.dose_target, p.dose_risk};
    for (double &v : lin.weight_target.values)
      v = cfg_.beta1 / cfg_.gamma * chi_minus(v, cfg_.U, cfg_.gamma);
    for (double &v : lin.weight_risk.values)
      v = cfg_.beta2 / cfg_.gamma * chi_plus(v, cfg_.L, cfg_.gamma);
    return lin;
  }

  /// D_N F(u^k) du: one linearized forward solve and one adjoint solve.
  ControlField apply_DNF(const Linearization &lin, const ControlField &du) const {
    const auto &g = problem_->grid();
    const StateField dy = apply_S0(problem_->model, du);
    SpaceTimeArray src(g);
    if (cfg_.alpha != 0.0)
      src.axpy(cfg_.alpha, dy);
    add_weighted_dose(lin.weight_target, dy, src);
    add_weighted_dose(lin.weight_risk, dy, src);
    return problem_->model.adjoint_sweep(src);
  }

  /// Regularized energy whose gradient in <.,.>_V is u + F(u).
  double energy(const ControlField &u) const {
    const auto &g = problem_->grid();
    const Point p = evaluate(u);
    double e = 0.5 * inner_product_V(u, u, problem_->model);
    if (cfg_.alpha != 0.0) {
      SpaceTimeArray r = p.y;
      r.axpy(-1.0, problem_->z);
      e += 0.5 * cfg_.alpha * inner_product_Q(r, r, g);
    }
    e += cfg_.beta1 * integrate(p.dose_target, [&](double v) {
      return envelope_minus(v, cfg_.U, cfg_.gamma);
    });
    e += cfg_.beta2 * integrate(p.dose_risk, [&](double v) {
      return envelope_plus(v, cfg_.L, cfg_.gamma);
    });
    return e;
  }

  /// Unregularized L1 objective (the problem the homotopy approaches).
  double exact_objective(const ControlField &u) const {
    const auto &g = problem_->grid();
    const Point p = evaluate(u);
    double e = 0.5 * inner_product_V(u, u, problem_->model);
    if (cfg_.alpha != 0.0) {
      SpaceTimeArray r = p.y;
      r.axpy(-1.0, problem_->z);
      e += 0.5 * cfg_.alpha * inner_product_Q(r, r, g);
    }
    e += cfg_.beta1 * integrate(p.dose_target, [&](double v) { return g_minus(v, cfg_.U); });
    e += cfg_.beta2 * integrate(p.dose_risk, [&](double v) { return g_plus(v, cfg_.L); });
    return e;
  }

  /// Residual of the exact optimality system: multipliers are the regularized
  /// ones projected onto the subdifferentials at the current dose.
  double unregularized_residual(const ControlField &u, const Point &p) const {
    DoseField mu_t = p.dose_target;
    for (std::size_t j = 0; j < mu_t.values.size(); ++j) {
      const double d = p.dose_target.values[j];
      mu_t.values[j] = project_onto_subdiff_minus(my_minus(d, cfg_.U, cfg_.gamma), d, cfg_.U);
    }
    DoseField mu_r = p.dose_risk;
    for (std::size_t j = 0; j < mu_r.values.size(); ++j) {
      const double d = p.dose_risk.values[j];
      mu_r.values[j] = project_onto_subdiff_plus(my_plus(d, cfg_.L, cfg_.gamma), d, cfg_.L);
    }
    const ControlField F = problem_->model.adjoint_sweep(adjoint_source(p.y, mu_t, mu_r));
    return projected_residual_norm(u, F);
  }

private:
  SpaceTimeArray adjoint_source(const StateField &y, const DoseField &mu_t,
                                const DoseField &mu_r) const {
    SpaceTimeArray src(problem_->grid());
    if (cfg_.alpha != 0.0) {
      src.axpy(cfg_.alpha, y);
      src.axpy(-cfg_.alpha, problem_->z);
    }
    add_C_adjoint(cfg_.beta1, mu_t, src);
    add_C_adjoint(cfg_.beta2, mu_r, src);
    return src;
  }

};

/// Newton system operator  du + chi_Vad(-F(u^k)) D_N F(u^k) du  with masks frozen at u^k.
template <typename Formulation> class NewtonOperator {
public:
  NewtonOperator(const Formulation &form, const typename Formulation::Point &p)
      : form_(&form), lin_(form.linearize(p)), active_(p.F.nt(), p.F.nx(), 0.0) {
    const auto &cfg = form.config();
    for (int k = 0; k < active_.nt(); ++k)
      for (int i : form.problem().model.control_region().indices())
        active_(k, i) = chi_admissible(-p.F(k, i), cfg.u_min, cfg.u_max);
  }

  ControlField operator()(const ControlField &du) const {
    ControlField out = form_->apply_DNF(lin_, du);
    auto o = out.values();
    auto a = active_.values();
    auto d = du.values();
    for (std::size_t n = 0; n < o.size(); ++n)
      o[n] = d[n] + a[n] * o[n];
    return out;
  }

  const ControlField &admissible_mask() const { return active_; }

private:
  const Formulation *form_;
  typename Formulation::Linearization lin_;
  ControlField active_;
};

struct NewtonStep {
  ControlField delta;
  int krylov_iters = 0;
  GmresResult gmres;
};

/// Solves the Newton system for -T(u^k) with matrix-free GMRES.
template <typename Formulation>
NewtonStep solve_newton_step(const Formulation &form, const ControlField &u,
                             const typename Formulation::Point &p, const SsnSettings &s) {
  const NewtonOperator<Formulation> op(form, p);
  ControlField rhs = form.projected_residual(u, p.F);
  rhs.scale(-1.0);
  NewtonStep step;
  const auto &model = form.problem().model;
  const auto dot = [&model](const ControlField &a, const ControlField &b) {
    return inner_product_V(a, b, model);
  };
  step.gmres = gmres(op, rhs, step.delta, dot, GmresOptions{s.krylov_max_iters, s.krylov_tol});
  step.krylov_iters = step.gmres.iterations;
  return step;
}

template <typename Formulation> struct SsnResult {
  ControlField u;
  typename Formulation::Point point;
  SsnTrace trace;
};

/// Semismooth Newton iteration on T(u) = u - proj(-F(u)) with backtracking on ||T||.
///
/// A step length ls_factor^m is accepted for the smallest m with
/// ||T(u + tau du)|| <= ||T(u)||; after ls_max_stalls consecutive steps without
/// decrease the inequality becomes strict. Exhaustion of the line search ends the solve.
template <typename Formulation>
SsnResult<Formulation> ssn_solve(const Formulation &form, ControlField u0,
                                 const SsnSettings &s) {
  const auto &g = form.problem().grid();
  require_conforms(u0, g, "ssn_solve: initial control");
  SsnResult<Formulation> res{std::move(u0), {}, {}};
  res.point = form.evaluate(res.u);
  double r = form.projected_residual_norm(res.u, res.point.F);
  res.trace.initial_residual = r;

  int stalls = 0;
  for (int k = 1; k <= s.max_iters && !(r < s.residual_tol); ++k) {
    const NewtonStep step = solve_newton_step(form, res.u, res.point, s);

    const bool strict = stalls >= s.ls_max_stalls;
    bool accepted = false;
    double tau = 1.0;
    for (int m = 0; m <= s.ls_max_backtracks; ++m, tau *= s.ls_factor) {
      ControlField trial = res.u;
      trial.axpy(tau, step.delta);
      auto trial_point = form.evaluate(trial);
      const double r_trial = form.projected_residual_norm(trial, trial_point.F);
      if (r_trial < r || (!strict && r_trial == r)) {
        stalls = r_trial < r ? 0 : stalls + 1;
        res.u = std::move(trial);
        res.point = std::move(trial_point);
        r = r_trial;
        accepted = true;
        break;
      }
    }
    if (!accepted)
      break;
    res.trace.steps.push_back(SsnStep{k, tau, r, step.krylov_iters});
  }
  res.trace.converged = r < s.residual_tol;
  return res;
}

// Named entry points for the penalty formulation.

inline ControlField eval_F(const ControlField &u, const DoseProblem &problem,
                           const PenaltyConfig &cfg) {
  return DosePenalty(problem, cfg).evaluate(u).F;
}

inline ControlField eval_T(const ControlField &u, const DoseProblem &problem,
                           const PenaltyConfig &cfg) {
  const DosePenalty form(problem, cfg);
  return form.projected_residual(u, form.evaluate(u).F);
}

inline ControlField apply_newton_operator(const ControlField &u_k, const ControlField &du,
                                          const DoseProblem &problem,
                                          const PenaltyConfig &cfg) {
  const DosePenalty form(problem, cfg);
  const auto p = form.evaluate(u_k);
  return NewtonOperator<DosePenalty>(form, p)(du);
}

inline double eval_unregularized_residual(const ControlField &u, const DoseProblem &problem,
                                          const PenaltyConfig &cfg) {
  const DosePenalty form(problem, cfg);
  return form.unregularized_residual(u, form.evaluate(u));
}

} // namespace dvhpen
