#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dvhpen/config.hpp"
#include "dvhpen/dose.hpp"
#include "dvhpen/errors.hpp"
#include "dvhpen/grid.hpp"
#include "dvhpen/homotopy.hpp"
#include "dvhpen/ssn.hpp"

namespace dvhpen {

namespace detail {

inline std::ofstream open_for_write(const std::string &path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot open '" + path + "' for writing");
  return out;
}

inline void finish_write(std::ofstream &out, const std::string &path) {
  out.flush();
  if (!out)
    throw IoError("write failed for '" + path + "'");
}

inline std::string percent2(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * fraction);
  return buf;
}

} // namespace detail

/// `x,dose,target_level,risk_level`, one row per node; the level columns are
/// left empty off their region.
inline void write_dose_profile(const std::string &path, const SpaceTimeGrid &g,
                               const std::vector<double> &dose, const Region &target,
                               const Region &risk, double U, double L) {
  if (dose.size() != static_cast<std::size_t>(g.nx))
    throw DimensionError("dose profile: " + std::to_string(dose.size()) + " values for " +
                         std::to_string(g.nx) + " nodes");
  auto out = detail::open_for_write(path);
  out << "x,dose,target_level,risk_level\n";
  for (int i = 0; i < g.nx; ++i) {
    out << format_real(g.node(i)) << ',' << format_real(dose[static_cast<std::size_t>(i)])
        << ',';
    if (target.contains(i))
      out << format_real(U);
    out << ',';
    if (risk.contains(i))
      out << format_real(L);
    out << '\n';
  }
  detail::finish_write(out, path);
}

/// `level,fraction_risk,fraction_target` on a shared level grid.
inline void write_dvh(const std::string &path, const DvhCurve &risk, const DvhCurve &target) {
  if (risk.levels != target.levels)
    throw DimensionError("dvh: risk and target curves use different level grids");
  auto out = detail::open_for_write(path);
  out << "level,fraction_risk,fraction_target\n";
  for (std::size_t j = 0; j < risk.levels.size(); ++j)
    out << format_real(risk.levels[j]) << ',' << format_real(risk.fraction[j]) << ','
        << format_real(target.fraction[j]) << '\n';
  detail::finish_write(out, path);
}

/// `gamma_ratio,ssn_iters,pct_risk_above_L,pct_target_below_U,converged`.
inline void write_homotopy_table(const std::string &path,
                                 const std::vector<HomotopyRecord> &records) {
  auto out = detail::open_for_write(path);
  out << "gamma_ratio,ssn_iters,pct_risk_above_L,pct_target_below_U,converged\n";
  for (const auto &r : records)
    out << format_real(r.gamma_ratio) << ',' << r.ssn_iters << ','
        << detail::percent2(r.frac_risk_above_L) << ','
        << detail::percent2(r.frac_target_below_U) << ',' << (r.converged ? 1 : 0) << '\n';
  detail::finish_write(out, path);
}

/// `k,tau,residual`; row k = 0 holds the initial residual with an empty tau.
inline void write_ssn_trace(const std::string &path, const SsnTrace &trace) {
  auto out = detail::open_for_write(path);
  out << "k,tau,residual\n";
  out << "0,," << format_real(trace.initial_residual) << '\n';
  for (const auto &s : trace.steps)
    out << s.k << ',' << format_real(s.tau) << ',' << format_real(s.residual) << '\n';
  detail::finish_write(out, path);
}

/// Everything needed to reproduce and compare a run. Wall time lives here and
/// nowhere else, so the data files stay byte-identical across repeated runs.
struct RunSummary {
  std::string mode;
  ExperimentConfig config;
  double gamma0 = 0.0;
  double gamma_min_factor = 0.0;
  double final_gamma_ratio = 0.0;
  double final_frac_risk_above_L = 0.0;
  double final_frac_target_below_U = 0.0;
  bool any_converged = false;
  double wall_time_s = 0.0;
  std::vector<double> gamma_ratios;
  std::vector<int> converged; ///< 1/0 per entry of gamma_ratios

  friend bool operator==(const RunSummary &, const RunSummary &) = default;
};

inline void write_summary(std::ostream &out, const RunSummary &s) {
  out << "[run]\n"
      << "mode = " << s.mode << "\n"
      << "gamma0 = " << format_real(s.gamma0) << "\n"
      << "gamma_min_factor = " << format_real(s.gamma_min_factor) << "\n"
      << "final_gamma_ratio = " << format_real(s.final_gamma_ratio) << "\n"
      << "final_frac_risk_above_L = " << format_real(s.final_frac_risk_above_L) << "\n"
      << "final_frac_target_below_U = " << format_real(s.final_frac_target_below_U) << "\n"
      << "any_converged = " << (s.any_converged ? 1 : 0) << "\n"
      << "wall_time_s = " << format_real(s.wall_time_s) << "\n"
      << "gamma_ratios = " << detail::join_reals(s.gamma_ratios) << "\n"
      << "converged = ";
  for (std::size_t j = 0; j < s.converged.size(); ++j)
    out << (j ? ", " : "") << s.converged[j];
  out << "\n\n";
  write_config(out, s.config);
}

inline void write_summary(const std::string &path, const RunSummary &s) {
  auto out = detail::open_for_write(path);
  write_summary(out, s);
  detail::finish_write(out, path);
}

inline RunSummary read_summary(std::istream &in, const std::string &origin = "<stream>") {
  const auto pt = detail::read_ini_stream(in, origin);
  detail::check_keys(pt, {"run"});
  const auto run = pt.get_child_optional("run");
  if (!run)
    throw ConfigError("summary: " + origin + ": missing [run] section");
  const auto field = [&](const char *key) {
    const auto v = run->get_child_optional(key);
    if (!v)
      throw ConfigError("summary: " + origin + ": missing key '" + key + "' in [run]");
    return v->data();
  };

  RunSummary s;
  s.mode = std::string(detail::trim(field("mode")));
  s.gamma0 = detail::parse_real(field("gamma0"), "gamma0");
  s.gamma_min_factor = detail::parse_real(field("gamma_min_factor"), "gamma_min_factor");
  s.final_gamma_ratio = detail::parse_real(field("final_gamma_ratio"), "final_gamma_ratio");
  s.final_frac_risk_above_L =
      detail::parse_real(field("final_frac_risk_above_L"), "final_frac_risk_above_L");
  s.final_frac_target_below_U =
      detail::parse_real(field("final_frac_target_below_U"), "final_frac_target_below_U");
  s.any_converged = detail::parse_int(field("any_converged"), "any_converged") != 0;
  s.wall_time_s = detail::parse_real(field("wall_time_s"), "wall_time_s");
  s.gamma_ratios = detail::parse_real_list(field("gamma_ratios"), "gamma_ratios");
  const std::string conv = field("converged");
  if (!detail::trim(conv).empty())
    for (auto item : detail::split(conv, ','))
      s.converged.push_back(detail::parse_int(item, "converged"));
  if (s.converged.size() != s.gamma_ratios.size())
    throw ConfigError("summary: " + origin + ": gamma_ratios and converged differ in length");
  detail::read_into(pt, s.config);
  return s;
}

inline RunSummary read_summary(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open '" + path + "'");
  return read_summary(in, path);
}

} // namespace dvhpen
