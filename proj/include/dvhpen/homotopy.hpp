#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "dvhpen/boxpen.hpp"
#include "dvhpen/dose.hpp"
#include "dvhpen/errors.hpp"
#include "dvhpen/ssn.hpp"

namespace dvhpen {

enum class ProblemMode { penalty, constraint };

inline std::string_view to_string(ProblemMode m) {
  return m == ProblemMode::penalty ? "penalty" : "constraint";
}

inline ProblemMode parse_mode(std::string_view s) {
  if (s == "penalty")
    return ProblemMode::penalty;
  if (s == "constraint")
    return ProblemMode::constraint;
  throw ConfigError("unknown mode '" + std::string(s) + "' (expected penalty or constraint)");
}

struct HomotopySchedule {
  double gamma0 = 0.0; ///< <= 0 selects default_gamma0
  double reduction = 0.5;
  double gamma_min_factor = 1e-10;

  void validate() const {
    if (!(reduction > 0.0 && reduction < 1.0))
      throw ConfigError("schedule: reduction must lie in (0,1)");
    if (!(gamma_min_factor > 0.0 && gamma_min_factor <= 1.0))
      throw ConfigError("schedule: gamma_min_factor must lie in (0,1]");
  }

  friend bool operator==(const HomotopySchedule &, const HomotopySchedule &) = default;
};

struct HomotopyRecord {
  double gamma = 0.0;
  double gamma_ratio = 0.0;
  int ssn_iters = 0;
  bool converged = false;
  double frac_risk_above_L = 0.0;
  double frac_target_below_U = 0.0;
  double final_residual = 0.0;
  /// Residual of the unregularized optimality system (penalty mode only, else NaN).
  double os_residual = std::nan("");
};

template <typename Formulation> struct HomotopyResult {
  ControlField u;                ///< last converged control (zero if none)
  std::vector<HomotopyRecord> records;
  SsnTrace last_trace;           ///< trace of the last converged solve
  double gamma0 = 0.0;
  double final_gamma = 0.0;      ///< gamma of the last converged solve
  bool any_converged = false;

  const HomotopyRecord *last_converged() const {
    for (auto it = records.rbegin(); it != records.rend(); ++it)
      if (it->converged)
        return &*it;
    return nullptr;
  }
};

/// gamma0 = max(beta1, beta2) for the dose penalty, 1 for the state constraints.
inline double default_gamma0(ProblemMode mode, const PenaltyConfig &cfg) {
  return mode == ProblemMode::penalty ? std::max(cfg.beta1, cfg.beta2) : 1.0;
}

/// gamma-continuation: solve at gamma0, then keep multiplying gamma by the
/// reduction factor, warm-starting from the previous solution, while
/// gamma/gamma0 >= gamma_min_factor. The first failed solve is recorded and
/// ends the schedule; the last converged control is returned.
template <typename Formulation>
HomotopyResult<Formulation> run_homotopy(const DoseProblem &problem, PenaltyConfig cfg,
                                         double gamma0, const HomotopySchedule &schedule,
                                         const SsnSettings &settings) {
  schedule.validate();
  settings.validate();
  if (!(gamma0 > 0.0))
    throw ConfigError("schedule: gamma0 must be positive");

  HomotopyResult<Formulation> out;
  out.gamma0 = gamma0;
  out.u = ControlField(problem.grid());
  ControlField start = out.u;

  // Relative slack so that exact powers of the reduction hit the target.
  const double stop = schedule.gamma_min_factor * (1.0 - 1e-12);
  for (double gamma = gamma0; gamma / gamma0 >= stop; gamma *= schedule.reduction) {
    cfg.gamma = gamma;
    const Formulation form(problem, cfg);
    auto res = ssn_solve(form, start, settings);

    HomotopyRecord rec;
    rec.gamma = gamma;
    rec.gamma_ratio = gamma / gamma0;
    rec.ssn_iters = res.trace.iterations();
    rec.converged = res.trace.converged;
    rec.frac_risk_above_L = volume_fraction_above(res.point.dose_risk, cfg.L);
    rec.frac_target_below_U = volume_fraction_below(res.point.dose_target, cfg.U);
    rec.final_residual = res.trace.final_residual();
    if constexpr (requires { form.unregularized_residual(res.u, res.point); })
      rec.os_residual = form.unregularized_residual(res.u, res.point);
    out.records.push_back(rec);

    if (!rec.converged)
      break;
    out.any_converged = true;
    out.final_gamma = gamma;
    out.last_trace = res.trace;
    out.u = res.u;
    start = std::move(res.u);
  }
  return out;
}

/// State-constraint comparison run: gamma0 = 1, halving, down to 1e-7 gamma0.
inline HomotopyResult<StateConstraintPenalty>
run_box_experiment(const DoseProblem &problem, const PenaltyConfig &cfg,
                   const SsnSettings &settings, double gamma_min_factor = 1e-7) {
  HomotopySchedule schedule;
  schedule.gamma0 = 1.0;
  schedule.reduction = 0.5;
  schedule.gamma_min_factor = gamma_min_factor;
  return run_homotopy<StateConstraintPenalty>(problem, cfg, 1.0, schedule, settings);
}

} // namespace dvhpen
