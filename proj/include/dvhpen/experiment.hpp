#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "dvhpen/boxpen.hpp"
#include "dvhpen/config.hpp"
#include "dvhpen/dose.hpp"
#include "dvhpen/homotopy.hpp"
#include "dvhpen/report.hpp"
#include "dvhpen/ssn.hpp"

namespace dvhpen {

/// Grid, regions and PDE built from a config. omega_T loses the nodes it
/// shares with omega_R, so touching intervals never count twice.
struct Setup {
  SpaceTimeGrid grid;
  Region target;
  Region risk;
  DoseProblem problem;
  PenaltyConfig penalty;
};

inline Setup build_setup(const ExperimentConfig &cfg) {
  cfg.validate();
  const auto g = build_grid(cfg.x_left, cfg.x_right, cfg.nx, cfg.T, cfg.nt);
  Region risk(g, cfg.risk);
  Region target = Region(g, cfg.target).excluding(risk, g);
  Region control(g, cfg.control);

  std::vector<double> y0 = cfg.y0.size() == 1
                               ? std::vector<double>(static_cast<std::size_t>(g.nx), cfg.y0[0])
                               : cfg.y0;
  HeatModel model(g, cfg.c, std::move(y0), std::move(control), cfg.control_metric);
  SpaceTimeArray z(g);
  z.fill(cfg.z);

  PenaltyConfig pc;
  pc.alpha = cfg.alpha;
  pc.beta1 = cfg.beta1();
  pc.beta2 = cfg.beta2();
  pc.U = cfg.U;
  pc.L = cfg.L;
  pc.u_min = cfg.u_min;
  pc.u_max = cfg.u_max;
  pc.gamma = 1.0;
  pc.validate();

  return Setup{g, target, risk, DoseProblem(std::move(model), target, risk, std::move(z)), pc};
}

inline double default_gamma_min_factor(ProblemMode mode) {
  return mode == ProblemMode::penalty ? 1e-10 : 1e-7;
}

/// Result of one homotopy run, independent of the formulation type.
struct ModeRun {
  ProblemMode mode = ProblemMode::penalty;
  double gamma0 = 0.0;
  double gamma_min_factor = 0.0;
  std::vector<HomotopyRecord> records;
  SsnTrace last_trace;
  ControlField u;
  bool any_converged = false;
  double wall_time_s = 0.0;

  const HomotopyRecord *last_converged() const {
    for (auto it = records.rbegin(); it != records.rend(); ++it)
      if (it->converged)
        return &*it;
    return nullptr;
  }
};

inline ModeRun run_mode(ProblemMode mode, const Setup &setup, const ExperimentConfig &cfg) {
  ModeRun out;
  out.mode = mode;
  out.gamma0 = cfg.gamma0 > 0.0 ? cfg.gamma0 : default_gamma0(mode, setup.penalty);
  out.gamma_min_factor =
      cfg.gamma_min_factor > 0.0 ? cfg.gamma_min_factor : default_gamma_min_factor(mode);
  HomotopySchedule schedule{out.gamma0, cfg.reduction, out.gamma_min_factor};

  const auto t0 = std::chrono::steady_clock::now();
  const auto take = [&out](auto &&res) {
    out.records = std::move(res.records);
    out.last_trace = std::move(res.last_trace);
    out.u = std::move(res.u);
    out.any_converged = res.any_converged;
  };
  if (mode == ProblemMode::penalty)
    take(run_homotopy<DosePenalty>(setup.problem, setup.penalty, out.gamma0, schedule,
                                   cfg.solver));
  else
    take(run_homotopy<StateConstraintPenalty>(setup.problem, setup.penalty, out.gamma0,
                                              schedule, cfg.solver));
  out.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

inline std::string format_record_line(ProblemMode mode, const HomotopyRecord &r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "[%s] gamma/gamma0=%.3e ssn=%d risk>L=%.2f%% target<U=%.2f%% %s",
                std::string(to_string(mode)).c_str(), r.gamma_ratio, r.ssn_iters,
                100.0 * r.frac_risk_above_L, 100.0 * r.frac_target_below_U,
                r.converged ? "converged" : "FAILED");
  return buf;
}

/// Writes homotopy.csv, ssn_trace.csv, dose_profile.csv, dvh.csv and
/// summary.ini for one run into dir.
inline RunSummary write_run_outputs(const std::filesystem::path &dir, const ModeRun &run,
                                    const Setup &setup, const ExperimentConfig &cfg) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());

  const auto &g = setup.grid;
  const StateField y = solve_state(setup.problem.model, run.u);
  const DoseField dose_all = apply_C(Region::domain(g), y, g);
  const DoseField dose_t = apply_C(setup.target, y, g);
  const DoseField dose_r = apply_C(setup.risk, y, g);

  const auto levels = linspace(0.0, cfg.dvh_max_factor * cfg.U, cfg.dvh_levels);
  write_homotopy_table((dir / "homotopy.csv").string(), run.records);
  write_ssn_trace((dir / "ssn_trace.csv").string(), run.last_trace);
  write_dose_profile((dir / "dose_profile.csv").string(), g, dose_all.values, setup.target,
                     setup.risk, cfg.U, cfg.L);
  write_dvh((dir / "dvh.csv").string(), dvh_curve(dose_r, levels), dvh_curve(dose_t, levels));

  RunSummary s;
  s.mode = std::string(to_string(run.mode));
  s.config = cfg;
  s.gamma0 = run.gamma0;
  s.gamma_min_factor = run.gamma_min_factor;
  s.any_converged = run.any_converged;
  s.wall_time_s = run.wall_time_s;
  if (const auto *last = run.last_converged()) {
    s.final_gamma_ratio = last->gamma_ratio;
    s.final_frac_risk_above_L = last->frac_risk_above_L;
    s.final_frac_target_below_U = last->frac_target_below_U;
  }
  for (const auto &r : run.records) {
    s.gamma_ratios.push_back(r.gamma_ratio);
    s.converged.push_back(r.converged ? 1 : 0);
  }
  write_summary((dir / "summary.ini").string(), s);
  return s;
}

/// Runs one mode end to end and prints one line per gamma.
inline ModeRun run_and_report(ProblemMode mode, const ExperimentConfig &cfg,
                              const std::filesystem::path &dir, std::ostream &log) {
  const Setup setup = build_setup(cfg);
  ModeRun run = run_mode(mode, setup, cfg);
  for (const auto &r : run.records)
    log << format_record_line(mode, r) << '\n';
  write_run_outputs(dir, run, setup, cfg);
  return run;
}

struct SweepRow {
  double beta_tilde = 0.0;
  ModeRun run;
};

/// beta1_tilde = beta2_tilde = b for every b in cfg.beta_sweep, penalty mode.
/// Each run goes to dir/beta_<b>; the combined table is dir/beta_sweep.csv.
inline std::vector<SweepRow> run_beta_sweep(const ExperimentConfig &cfg,
                                            const std::filesystem::path &dir, std::ostream &log) {
  if (cfg.beta_sweep.empty())
    throw ConfigError("config: [schedule] beta_sweep is empty");
  std::vector<SweepRow> rows;
  for (double b : cfg.beta_sweep) {
    ExperimentConfig c = cfg;
    c.beta1_tilde = b;
    c.beta2_tilde = b;
    log << "beta_tilde = " << format_real(b) << '\n';
    rows.push_back({b, run_and_report(ProblemMode::penalty, c, dir / ("beta_" + format_real(b)),
                                      log)});
  }

  const std::string path = (dir / "beta_sweep.csv").string();
  auto out = detail::open_for_write(path);
  out << "beta_tilde,final_gamma_ratio,ssn_iters,pct_risk_above_L,pct_target_below_U,converged\n";
  for (const auto &row : rows) {
    const auto *last = row.run.last_converged();
    out << format_real(row.beta_tilde) << ',';
    if (last)
      out << format_real(last->gamma_ratio) << ',' << last->ssn_iters << ','
          << detail::percent2(last->frac_risk_above_L) << ','
          << detail::percent2(last->frac_target_below_U) << ",1\n";
    else
      out << ",,,,0\n";
  }
  detail::finish_write(out, path);
  return rows;
}

/// Verb dispatch. Returns 0 when at least one gamma converged, 1 otherwise.
/// Configuration problems propagate as ConfigError.
inline int run_experiment(std::string_view verb, const ExperimentConfig &cfg,
                          const std::filesystem::path &dir, std::ostream &log) {
  if (verb == "penalty" || verb == "constraint") {
    const auto run = run_and_report(parse_mode(verb), cfg, dir, log);
    return run.any_converged ? 0 : 1;
  }
  if (verb == "compare") {
    const auto p = run_and_report(ProblemMode::penalty, cfg, dir / "penalty", log);
    const auto c = run_and_report(ProblemMode::constraint, cfg, dir / "constraint", log);
    return p.any_converged || c.any_converged ? 0 : 1;
  }
  if (verb == "beta-sweep") {
    const auto rows = run_beta_sweep(cfg, dir, log);
    const bool any = std::any_of(rows.begin(), rows.end(),
                                 [](const SweepRow &r) { return r.run.any_converged; });
    return any ? 0 : 1;
  }
  throw ConfigError("unknown command '" + std::string(verb) +
                    "' (expected penalty, constraint, compare or beta-sweep)");
}

} // namespace dvhpen
