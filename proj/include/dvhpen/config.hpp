#pragma once

#include <charconv>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "dvhpen/errors.hpp"
#include "dvhpen/grid.hpp"
#include "dvhpen/heat.hpp"
#include "dvhpen/ssn.hpp"

namespace dvhpen {

/// Shortest text that parses back to exactly the same double.
inline std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos)
      break;
    start = pos + 1;
  }
  return out;
}

inline double parse_real(std::string_view text, const std::string &key) {
  text = trim(text);
  if (!text.empty() && text.front() == '+')
    text.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ConfigError("config: key '" + key + "': expected a number, got '" +
                      std::string(text) + "'");
  return v;
}

inline int parse_int(std::string_view text, const std::string &key) {
  text = trim(text);
  int v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ConfigError("config: key '" + key + "': expected an integer, got '" +
                      std::string(text) + "'");
  return v;
}

inline std::vector<double> parse_real_list(std::string_view text, const std::string &key) {
  std::vector<double> out;
  if (trim(text).empty())
    return out;
  for (auto item : split(text, ','))
    out.push_back(parse_real(item, key));
  return out;
}

/// "a:b, c:d" -> intervals.
inline std::vector<Interval> parse_intervals(std::string_view text, const std::string &key) {
  std::vector<Interval> out;
  if (trim(text).empty())
    return out;
  for (auto item : split(text, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() != 2)
      throw ConfigError("config: key '" + key + "': expected 'a:b' intervals, got '" +
                        std::string(item) + "'");
    out.push_back(Interval{parse_real(parts[0], key), parse_real(parts[1], key)});
  }
  return out;
}

inline std::string join_reals(const std::vector<double> &v) {
  std::string s;
  for (std::size_t j = 0; j < v.size(); ++j)
    s += (j ? ", " : "") + format_real(v[j]);
  return s;
}

inline std::string join_intervals(const std::vector<Interval> &v) {
  std::string s;
  for (std::size_t j = 0; j < v.size(); ++j)
    s += (j ? ", " : "") + format_real(v[j].a) + ":" + format_real(v[j].b);
  return s;
}

} // namespace detail

/// How the configured beta values relate to the weights in the objective.
/// `normalized`: beta_i = beta_i_tilde / |omega_i| (Lebesgue measure of the
/// configured intervals), so equal tildes weigh both regions equally.
enum class BetaScaling { normalized, raw };

inline std::string_view to_string(BetaScaling s) {
  return s == BetaScaling::normalized ? "normalized" : "raw";
}

inline std::string_view to_string(ControlMetric m) {
  return m == ControlMetric::nodal ? "nodal" : "quadrature";
}

/// Full description of one experiment. Defaults reproduce the reference setup.
struct ExperimentConfig {
  // [domain]
  double x_left = -1.0;
  double x_right = 1.0;
  double T = 1.0;
  double c = 0.01;
  int nx = 256;
  int nt = 256;
  std::vector<double> y0{0.0}; ///< one value (constant) or nx nodal values
  double z = 0.0;              ///< constant desired state, used only when alpha > 0

  // [regions]
  std::vector<Interval> target{{-0.45, -0.2}, {0.2, 0.45}};
  std::vector<Interval> risk{{-0.7, -0.55}, {-0.2, 0.2}, {0.55, 0.7}};
  std::vector<Interval> control{{-1.0, 1.0}};

  // [levels]
  double U = 0.5;
  double L = 0.2;

  // [penalty]
  double alpha = 0.0;
  double beta1_tilde = 1e5;
  double beta2_tilde = 1e5;
  BetaScaling beta_scaling = BetaScaling::normalized;
  double u_min = 0.0;
  double u_max = 2.0;

  // [schedule]
  double gamma0 = 0.0;           ///< <= 0: mode default
  double reduction = 0.5;
  double gamma_min_factor = 0.0; ///< <= 0: mode default (1e-10 penalty, 1e-7 constraint)
  std::vector<double> beta_sweep{1e7, 1e8, 1e9, 1e10};

  // [solver]
  SsnSettings solver;
  ControlMetric control_metric = ControlMetric::nodal;

  // [output]
  std::string out_dir = "out";
  int dvh_levels = 200;
  double dvh_max_factor = 1.2;

  double target_measure() const {
    double m = 0.0;
    for (const auto &iv : target)
      m += iv.length();
    return m;
  }
  double risk_measure() const {
    double m = 0.0;
    for (const auto &iv : risk)
      m += iv.length();
    return m;
  }
  double beta1() const {
    return beta_scaling == BetaScaling::normalized ? beta1_tilde / target_measure()
                                                   : beta1_tilde;
  }
  double beta2() const {
    return beta_scaling == BetaScaling::normalized ? beta2_tilde / risk_measure()
                                                   : beta2_tilde;
  }

  /// Checks everything that does not need a grid, then builds the grid and
  /// regions once to surface placement errors.
  void validate() const {
    if (target.empty() || risk.empty() || control.empty())
      throw ConfigError("config: [regions] target, risk and control must be non-empty");
    if (!(T > 0.0) || !(c > 0.0))
      throw ConfigError("config: [domain] T and c must be positive");
    if (y0.size() != 1 && y0.size() != static_cast<std::size_t>(nx))
      throw ConfigError("config: [domain] y0 must hold 1 or nx=" + std::to_string(nx) +
                        " values, got " + std::to_string(y0.size()));
    if (!(L > 0.0) || !(U > L))
      throw ConfigError("config: [levels] require 0 < L < U");
    if (!(u_min < u_max))
      throw ConfigError("config: [penalty] u_min must be below u_max");
    if (!(alpha >= 0.0))
      throw ConfigError("config: [penalty] alpha must be >= 0");
    if (!(beta1_tilde > 0.0) || !(beta2_tilde > 0.0))
      throw ConfigError("config: [penalty] beta1_tilde and beta2_tilde must be positive");
    if (!(reduction > 0.0 && reduction < 1.0))
      throw ConfigError("config: [schedule] reduction must lie in (0,1)");
    if (gamma_min_factor > 1.0)
      throw ConfigError("config: [schedule] gamma_min_factor must be <= 1");
    for (double b : beta_sweep)
      if (!(b > 0.0))
        throw ConfigError("config: [schedule] beta_sweep entries must be positive");
    if (dvh_levels < 2 || !(dvh_max_factor > 0.0))
      throw ConfigError("config: [output] dvh_levels >= 2 and dvh_max_factor > 0 required");
    solver.validate();

    const auto g = build_grid(x_left, x_right, nx, T, nt);
    const Region rt(g, target), rr(g, risk), rc(g, control);
    if (rt.intersects(rr))
      throw ConfigError("config: [regions] target and risk intervals overlap");
    if (rt.excluding(rr, g).size() == 0 || rr.size() == 0 || rc.size() == 0)
      throw ConfigError("config: [regions] a region contains no grid node");
  }

  friend bool operator==(const ExperimentConfig &, const ExperimentConfig &) = default;
};

namespace detail {

using boost::property_tree::ptree;

// Section -> allowed keys; anything else in a config file is a typo.
inline const std::map<std::string, std::set<std::string>> &config_schema() {
  static const std::map<std::string, std::set<std::string>> schema{
      {"domain", {"x_left", "x_right", "T", "c", "nx", "nt", "y0", "z"}},
      {"regions", {"target", "risk", "control"}},
      {"levels", {"U", "L"}},
      {"penalty", {"alpha", "beta1_tilde", "beta2_tilde", "beta_scaling", "u_min", "u_max"}},
      {"schedule", {"gamma0", "reduction", "gamma_min_factor", "beta_sweep"}},
      {"solver",
       {"max_ssn", "residual_tol", "krylov_max", "krylov_tol", "ls_max_backtracks", "ls_factor",
        "ls_max_stalls", "control_metric"}},
      {"output", {"dir", "dvh_levels", "dvh_max_factor"}},
  };
  return schema;
}

inline void check_keys(const ptree &pt, const std::set<std::string> &extra_sections) {
  const auto &schema = config_schema();
  for (const auto &[section, body] : pt) {
    if (extra_sections.count(section))
      continue;
    const auto it = schema.find(section);
    if (it == schema.end()) {
      if (body.empty() && !body.data().empty())
        throw ConfigError("config: key '" + section + "' outside of any section");
      throw ConfigError("config: unknown section [" + section + "]");
    }
    for (const auto &kv : body)
      if (!it->second.count(kv.first))
        throw ConfigError("config: unknown key '" + kv.first + "' in [" + section + "]");
  }
}

inline std::optional<std::string> get(const ptree &pt, const std::string &section,
                                      const std::string &key) {
  const auto s = pt.get_child_optional(section);
  if (!s)
    return std::nullopt;
  const auto v = s->get_child_optional(key);
  if (!v)
    return std::nullopt;
  return v->data();
}

inline void read_into(const ptree &pt, ExperimentConfig &cfg) {
  const auto real = [&](const char *sec, const char *key, double &dst) {
    if (auto v = get(pt, sec, key))
      dst = parse_real(*v, key);
  };
  const auto integer = [&](const char *sec, const char *key, int &dst) {
    if (auto v = get(pt, sec, key))
      dst = parse_int(*v, key);
  };
  const auto intervals = [&](const char *key, std::vector<Interval> &dst) {
    if (auto v = get(pt, "regions", key))
      dst = parse_intervals(*v, key);
  };

  real("domain", "x_left", cfg.x_left);
  real("domain", "x_right", cfg.x_right);
  real("domain", "T", cfg.T);
  real("domain", "c", cfg.c);
  integer("domain", "nx", cfg.nx);
  integer("domain", "nt", cfg.nt);
  if (auto v = get(pt, "domain", "y0"))
    cfg.y0 = parse_real_list(*v, "y0");
  real("domain", "z", cfg.z);

  intervals("target", cfg.target);
  intervals("risk", cfg.risk);
  intervals("control", cfg.control);

  real("levels", "U", cfg.U);
  real("levels", "L", cfg.L);

  real("penalty", "alpha", cfg.alpha);
  real("penalty", "beta1_tilde", cfg.beta1_tilde);
  real("penalty", "beta2_tilde", cfg.beta2_tilde);
  if (auto v = get(pt, "penalty", "beta_scaling")) {
    const auto s = trim(*v);
    if (s == "normalized")
      cfg.beta_scaling = BetaScaling::normalized;
    else if (s == "raw")
      cfg.beta_scaling = BetaScaling::raw;
    else
      throw ConfigError("config: key 'beta_scaling': expected normalized or raw, got '" +
                        std::string(s) + "'");
  }
  real("penalty", "u_min", cfg.u_min);
  real("penalty", "u_max", cfg.u_max);

  real("schedule", "gamma0", cfg.gamma0);
  real("schedule", "reduction", cfg.reduction);
  real("schedule", "gamma_min_factor", cfg.gamma_min_factor);
  if (auto v = get(pt, "schedule", "beta_sweep"))
    cfg.beta_sweep = parse_real_list(*v, "beta_sweep");

  integer("solver", "max_ssn", cfg.solver.max_iters);
  real("solver", "residual_tol", cfg.solver.residual_tol);
  integer("solver", "krylov_max", cfg.solver.krylov_max_iters);
  real("solver", "krylov_tol", cfg.solver.krylov_tol);
  integer("solver", "ls_max_backtracks", cfg.solver.ls_max_backtracks);
  real("solver", "ls_factor", cfg.solver.ls_factor);
  integer("solver", "ls_max_stalls", cfg.solver.ls_max_stalls);
  if (auto v = get(pt, "solver", "control_metric")) {
    const auto s = trim(*v);
    if (s == "nodal")
      cfg.control_metric = ControlMetric::nodal;
    else if (s == "quadrature")
      cfg.control_metric = ControlMetric::quadrature;
    else
      throw ConfigError("config: key 'control_metric': expected nodal or quadrature, got '" +
                        std::string(s) + "'");
  }

  if (auto v = get(pt, "output", "dir"))
    cfg.out_dir = std::string(trim(*v));
  integer("output", "dvh_levels", cfg.dvh_levels);
  real("output", "dvh_max_factor", cfg.dvh_max_factor);
}

inline ptree read_ini_stream(std::istream &in, const std::string &origin) {
  ptree pt;
  try {
    boost::property_tree::ini_parser::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error &e) {
    throw ConfigError("config: " + origin + ": line " + std::to_string(e.line()) + ": " +
                      e.message());
  }
  return pt;
}

} // namespace detail

/// Parses an INI config; omitted keys keep their defaults. Validates the result.
inline ExperimentConfig parse_config(std::istream &in, const std::string &origin = "<stream>") {
  const auto pt = detail::read_ini_stream(in, origin);
  detail::check_keys(pt, {});
  ExperimentConfig cfg;
  detail::read_into(pt, cfg);
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("config: cannot open '" + path + "'");
  return parse_config(in, path);
}

inline void write_config(std::ostream &out, const ExperimentConfig &cfg) {
  using detail::join_intervals;
  using detail::join_reals;
  const auto r = [](double v) { return format_real(v); };
  out << "[domain]\n"
      << "x_left = " << r(cfg.x_left) << "\n"
      << "x_right = " << r(cfg.x_right) << "\n"
      << "T = " << r(cfg.T) << "\n"
      << "c = " << r(cfg.c) << "\n"
      << "nx = " << cfg.nx << "\n"
      << "nt = " << cfg.nt << "\n"
      << "y0 = " << join_reals(cfg.y0) << "\n"
      << "z = " << r(cfg.z) << "\n\n"
      << "[regions]\n"
      << "target = " << join_intervals(cfg.target) << "\n"
      << "risk = " << join_intervals(cfg.risk) << "\n"
      << "control = " << join_intervals(cfg.control) << "\n\n"
      << "[levels]\n"
      << "U = " << r(cfg.U) << "\n"
      << "L = " << r(cfg.L) << "\n\n"
      << "[penalty]\n"
      << "alpha = " << r(cfg.alpha) << "\n"
      << "beta1_tilde = " << r(cfg.beta1_tilde) << "\n"
      << "beta2_tilde = " << r(cfg.beta2_tilde) << "\n"
      << "beta_scaling = " << to_string(cfg.beta_scaling) << "\n"
      << "u_min = " << r(cfg.u_min) << "\n"
      << "u_max = " << r(cfg.u_max) << "\n\n"
      << "[schedule]\n"
      << "gamma0 = " << r(cfg.gamma0) << "\n"
      << "reduction = " << r(cfg.reduction) << "\n"
      << "gamma_min_factor = " << r(cfg.gamma_min_factor) << "\n"
      << "beta_sweep = " << join_reals(cfg.beta_sweep) << "\n\n"
      << "[solver]\n"
      << "max_ssn = " << cfg.solver.max_iters << "\n"
      << "residual_tol = " << r(cfg.solver.residual_tol) << "\n"
      << "krylov_max = " << cfg.solver.krylov_max_iters << "\n"
      << "krylov_tol = " << r(cfg.solver.krylov_tol) << "\n"
      << "ls_max_backtracks = " << cfg.solver.ls_max_backtracks << "\n"
      << "ls_factor = " << r(cfg.solver.ls_factor) << "\n"
      << "ls_max_stalls = " << cfg.solver.ls_max_stalls << "\n"
      << "control_metric = " << to_string(cfg.control_metric) << "\n\n"
      << "[output]\n"
      << "dir = " << cfg.out_dir << "\n"
      << "dvh_levels = " << cfg.dvh_levels << "\n"
      << "dvh_max_factor = " << r(cfg.dvh_max_factor) << "\n";
}

inline std::string config_to_string(const ExperimentConfig &cfg) {
  std::ostringstream os;
  write_config(os, cfg);
  return os.str();
}

inline void save_config(const std::string &path, const ExperimentConfig &cfg) {
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot write '" + path + "'");
  write_config(out, cfg);
  if (!out)
    throw IoError("write failed for '" + path + "'");
}

} // namespace dvhpen
