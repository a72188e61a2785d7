#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "dvhpen/report.hpp"

using namespace dvhpen;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string &name) {
  const auto d = fs::temp_directory_path() / ("dvhpen_report_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace

TEST(Report, DoseProfileLeavesLevelsEmptyOffRegion) {
  const auto d = scratch_dir("profile");
  const auto g = build_grid(-1, 1, 3, 1.0, 1);
  const Region target(g, {{-1, -1}});
  const Region risk(g, {{1, 1}});
  write_dose_profile((d / "p.csv").string(), g, {0.0, 0.25, 1.5}, target, risk, 0.5, 0.2);
  EXPECT_EQ(slurp(d / "p.csv"), "x,dose,target_level,risk_level\n"
                                "-1,0,0.5,\n"
                                "0,0.25,,\n"
                                "1,1.5,,0.2\n");
  EXPECT_THROW(write_dose_profile((d / "q.csv").string(), g, {0.0}, target, risk, 0.5, 0.2),
               DimensionError);
}

TEST(Report, DvhTable) {
  const auto d = scratch_dir("dvh");
  const DvhCurve r{{0.0, 0.5, 1.0}, {1.0, 1.0, 0.0}};
  const DvhCurve t{{0.0, 0.5, 1.0}, {1.0, 0.25, 0.0}};
  write_dvh((d / "dvh.csv").string(), r, t);
  EXPECT_EQ(slurp(d / "dvh.csv"), "level,fraction_risk,fraction_target\n"
                                  "0,1,1\n"
                                  "0.5,1,0.25\n"
                                  "1,0,0\n");
  const DvhCurve other{{0.0, 0.4, 1.0}, {1.0, 0.0, 0.0}};
  EXPECT_THROW(write_dvh((d / "x.csv").string(), r, other), DimensionError);
}

TEST(Report, HomotopyTableFormatsPercentages) {
  const auto d = scratch_dir("table");
  write_homotopy_table((d / "empty.csv").string(), {});
  EXPECT_EQ(slurp(d / "empty.csv"),
            "gamma_ratio,ssn_iters,pct_risk_above_L,pct_target_below_U,converged\n");

  HomotopyRecord a;
  a.gamma_ratio = 1.0;
  a.ssn_iters = 3;
  a.frac_risk_above_L = 6.0 / 45.0;
  a.frac_target_below_U = 1.0;
  a.converged = true;
  HomotopyRecord b = a;
  b.gamma_ratio = 0.0078125;
  b.frac_risk_above_L = 0.0;
  b.converged = false;
  write_homotopy_table((d / "t.csv").string(), {a, b});
  EXPECT_EQ(slurp(d / "t.csv"),
            "gamma_ratio,ssn_iters,pct_risk_above_L,pct_target_below_U,converged\n"
            "1,3,13.33,100.00,1\n"
            "0.0078125,3,0.00,100.00,0\n");
}

TEST(Report, TraceStartsWithInitialResidual) {
  const auto d = scratch_dir("trace");
  SsnTrace t;
  t.initial_residual = 2.5;
  t.steps = {{1, 1.0, 0.5, 4}, {2, 0.25, 0.125, 6}};
  write_ssn_trace((d / "s.csv").string(), t);
  EXPECT_EQ(slurp(d / "s.csv"), "k,tau,residual\n0,,2.5\n1,1,0.5\n2,0.25,0.125\n");
}

TEST(Report, SummaryRoundTrip) {
  RunSummary s;
  s.mode = "penalty";
  s.config.nx = 65;
  s.config.beta1_tilde = 1e7;
  s.config.target = {{-0.4, -0.1}};
  s.gamma0 = 2e5;
  s.gamma_min_factor = 1e-10;
  s.final_gamma_ratio = 4.656612873077393e-10;
  s.final_frac_risk_above_L = 2.0 / 15.0;
  s.final_frac_target_below_U = 17.0 / 31.0;
  s.any_converged = true;
  s.wall_time_s = 12.25;
  s.gamma_ratios = {1.0, 0.5, 0.25};
  s.converged = {1, 1, 0};
  std::stringstream ss;
  write_summary(ss, s);
  EXPECT_EQ(read_summary(ss), s);
}

TEST(Report, SummaryRejectsMissingRunSection) {
  std::stringstream ss("[domain]\nnx = 9\n");
  EXPECT_THROW(read_summary(ss), ConfigError);
}

TEST(Report, IoErrorsNameThePath) {
  const std::string bad = "/nonexistent_dir_for_dvhpen/x.csv";
  try {
    write_ssn_trace(bad, SsnTrace{});
    FAIL() << "expected IoError";
  } catch (const IoError &e) {
    EXPECT_NE(std::string(e.what()).find(bad), std::string::npos);
  }
  EXPECT_THROW(read_summary(std::string("/nonexistent_dir_for_dvhpen/s.ini")), IoError);
}
