#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dvhpen/config.hpp"
#include "dvhpen/errors.hpp"
#include "dvhpen/experiment.hpp"

namespace {

struct Overrides {
  std::string config;
  std::string out;
  std::optional<double> beta1_tilde;
  std::optional<double> beta2_tilde;
  std::optional<double> gamma_min_factor;
  std::optional<int> nx;
  std::optional<int> nt;
  std::optional<int> max_ssn;
  std::optional<int> krylov_max;
};

void add_flags(CLI::App &cmd, Overrides &o) {
  cmd.add_option("--config", o.config, "INI config file (defaults to the reference setup)");
  cmd.add_option("--out", o.out, "output directory (overrides [output] dir)");
  cmd.add_option("--beta1-tilde", o.beta1_tilde, "[penalty] beta1_tilde");
  cmd.add_option("--beta2-tilde", o.beta2_tilde, "[penalty] beta2_tilde");
  cmd.add_option("--gamma-min-factor", o.gamma_min_factor, "[schedule] gamma_min_factor");
  cmd.add_option("--nx", o.nx, "[domain] nx");
  cmd.add_option("--nt", o.nt, "[domain] nt");
  cmd.add_option("--max-ssn", o.max_ssn, "[solver] max_ssn");
  cmd.add_option("--krylov-max", o.krylov_max, "[solver] krylov_max");
}

dvhpen::ExperimentConfig resolve(const Overrides &o) {
  dvhpen::ExperimentConfig cfg = o.config.empty() ? dvhpen::ExperimentConfig{}
                                                  : dvhpen::load_config(o.config);
  if (!o.out.empty())
    cfg.out_dir = o.out;
  if (o.beta1_tilde)
    cfg.beta1_tilde = *o.beta1_tilde;
  if (o.beta2_tilde)
    cfg.beta2_tilde = *o.beta2_tilde;
  if (o.gamma_min_factor)
    cfg.gamma_min_factor = *o.gamma_min_factor;
  if (o.nx)
    cfg.nx = *o.nx;
  if (o.nt)
    cfg.nt = *o.nt;
  if (o.max_ssn)
    cfg.solver.max_iters = *o.max_ssn;
  if (o.krylov_max)
    cfg.solver.krylov_max_iters = *o.krylov_max;
  cfg.validate();
  return cfg;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Semismooth Newton solver for dose-penalized heat control"};
  app.require_subcommand(1);

  Overrides o;
  for (const char *verb : {"penalty", "constraint", "compare", "beta-sweep"}) {
    const std::string help = std::string(verb) == "penalty"      ? "L1 dose-penalty homotopy"
                             : std::string(verb) == "constraint" ? "penalized dose constraints"
                             : std::string(verb) == "compare"    ? "both modes, same parameters"
                                                                 : "penalty mode over beta_sweep";
    add_flags(*app.add_subcommand(verb, help), o);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string verb = app.get_subcommands().front()->get_name();
  try {
    const auto cfg = resolve(o);
    return dvhpen::run_experiment(verb, cfg, std::filesystem::path(cfg.out_dir), std::cout);
  } catch (const dvhpen::ConfigError &e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const dvhpen::IoError &e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 3;
  }
}
