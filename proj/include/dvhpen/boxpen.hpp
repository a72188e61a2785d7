#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "dvhpen/ssn.hpp"

namespace dvhpen {

/// Quadratic (Moreau-Yosida) penalization of the pointwise dose constraints
/// C_T y >= U and C_R y <= L with weight 1/gamma. beta1/beta2 are not used.
///
/// The constraints are enforced node by node, so the penalty is
/// (1/2gamma) sum_i viol_i^2 over the constrained nodes and the multiplier
/// lambda_i = viol_i / gamma enters F through the nodal transpose of C:
///
/// F_box(u) = S0*( alpha (Su - z) + (1/gamma) C_T^T min(C_T Su - U, 0)
///                                + (1/gamma) C_R^T max(C_R Su - L, 0) ).
class StateConstraintPenalty : public FormulationBase {
public:
  using Point = DosePenalty::Point;
  using Linearization = DosePenalty::Linearization;

  StateConstraintPenalty(const DoseProblem &problem, PenaltyConfig cfg)
      : FormulationBase(problem, cfg) {
    if (!(cfg_.gamma > 0.0))
      throw ConfigError("penalty: gamma must be positive");
    if (!(cfg_.u_min < cfg_.u_max))
      throw ConfigError("penalty: u_min must be below u_max");
    if (!(cfg_.alpha >= 0.0))
      throw ConfigError("penalty: alpha must be >= 0");
  }

  Point evaluate(const ControlField &u) const {
    const auto &g = problem_->grid();
    Point p;
    p.y = solve_state(problem_->model, u);
    p.dose_target = apply_C(problem_->target, p.y, g);
    p.dose_risk = apply_C(problem_->risk, p.y, g);

    SpaceTimeArray src(g);
    if (cfg_.alpha != 0.0) {
      src.axpy(cfg_.alpha, p.y);
      src.axpy(-cfg_.alpha, problem_->z);
    }
    DoseField viol_t = p.dose_target;
    const auto &wt = viol_t.region.weights();
    for (std::size_t j = 0; j < wt.size(); ++j)
      viol_t.values[j] = std::min(viol_t.values[j] - cfg_.U, 0.0) / wt[j];
    DoseField viol_r = p.dose_risk;
    const auto &wr = viol_r.region.weights();
    for (std::size_t j = 0; j < wr.size(); ++j)
      viol_r.values[j] = std::max(viol_r.values[j] - cfg_.L, 0.0) / wr[j];
    add_C_adjoint(1.0 / cfg_.gamma, viol_t, src);
    add_C_adjoint(1.0 / cfg_.gamma, viol_r, src);
    p.F = problem_->model.adjoint_sweep(src);
    return p;
  }

  /// Violation sets are closed: {C_T y <= U} and {C_R y >= L}.
  Linearization linearize(const Point &p) const {
    Linearization lin{p.dose_target, p.dose_risk};
    const auto &wt = lin.weight_target.region.weights();
    for (std::size_t j = 0; j < wt.size(); ++j) {
      double &v = lin.weight_target.values[j];
      v = v <= cfg_.U ? 1.0 / (cfg_.gamma * wt[j]) : 0.0;
    }
    const auto &wr = lin.weight_risk.region.weights();
    for (std::size_t j = 0; j < wr.size(); ++j) {
      double &v = lin.weight_risk.values[j];
      v = v >= cfg_.L ? 1.0 / (cfg_.gamma * wr[j]) : 0.0;
    }
    return lin;
  }

  ControlField apply_DNF(const Linearization &lin, const ControlField &du) const {
    const StateField dy = apply_S0(problem_->model, du);
    SpaceTimeArray src(problem_->grid());
    if (cfg_.alpha != 0.0)
      src.axpy(cfg_.alpha, dy);
    add_weighted_dose(lin.weight_target, dy, src);
    add_weighted_dose(lin.weight_risk, dy, src);
    return problem_->model.adjoint_sweep(src);
  }

  double energy(const ControlField &u) const {
    const auto &g = problem_->grid();
    const Point p = evaluate(u);
    double e = 0.5 * inner_product_V(u, u, problem_->model);
    if (cfg_.alpha != 0.0) {
      SpaceTimeArray r = p.y;
      r.axpy(-1.0, problem_->z);
      e += 0.5 * cfg_.alpha * inner_product_Q(r, r, g);
    }
    double viol = 0.0;
    for (double v : p.dose_target.values)
      viol += std::pow(std::min(v - cfg_.U, 0.0), 2);
    for (double v : p.dose_risk.values)
      viol += std::pow(std::max(v - cfg_.L, 0.0), 2);
    return e + 0.5 / cfg_.gamma * viol;
  }
};

inline ControlField eval_F_box(const ControlField &u, const DoseProblem &problem,
                               const PenaltyConfig &cfg) {
  return StateConstraintPenalty(problem, cfg).evaluate(u).F;
}

inline ControlField eval_T_box(const ControlField &u, const DoseProblem &problem,
                               const PenaltyConfig &cfg) {
  const StateConstraintPenalty form(problem, cfg);
  return form.projected_residual(u, form.evaluate(u).F);
}

inline ControlField apply_newton_operator_box(const ControlField &u_k, const ControlField &du,
                                              const DoseProblem &problem,
                                              const PenaltyConfig &cfg) {
  const StateConstraintPenalty form(problem, cfg);
  const auto p = form.evaluate(u_k);
  return NewtonOperator<StateConstraintPenalty>(form, p)(du);
}

} // namespace dvhpen
