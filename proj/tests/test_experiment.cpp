#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "dvhpen/experiment.hpp"

using namespace dvhpen;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string &name) {
  const auto d = fs::temp_directory_path() / ("dvhpen_experiment_" + name);
  fs::remove_all(d);
  return d;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const fs::path &p) {
  const auto s = slurp(p);
  return static_cast<int>(std::count(s.begin(), s.end(), '\n'));
}

ExperimentConfig coarse() {
  ExperimentConfig c;
  c.nx = 33;
  c.nt = 32;
  c.gamma_min_factor = 1.0 / 64.0;
  c.dvh_levels = 11;
  return c;
}

} // namespace

TEST(Experiment, SetupFollowsConfig) {
  const auto s = build_setup(ExperimentConfig{});
  EXPECT_EQ(s.risk.size(), 90u);
  EXPECT_EQ(s.target.size(), 62u);
  EXPECT_FALSE(s.target.intersects(s.risk));
  EXPECT_NEAR(s.penalty.beta1, 2e5, 1e-9);
  EXPECT_NEAR(s.penalty.beta2, 1e5 / 0.7, 1e-9);
  EXPECT_EQ(default_gamma_min_factor(ProblemMode::penalty), 1e-10);
  EXPECT_EQ(default_gamma_min_factor(ProblemMode::constraint), 1e-7);
}

TEST(Experiment, PenaltyRunWritesAllOutputs) {
  const auto dir = scratch_dir("penalty");
  std::ostringstream log;
  EXPECT_EQ(run_experiment("penalty", coarse(), dir, log), 0);
  for (const char *f : {"homotopy.csv", "ssn_trace.csv", "dose_profile.csv", "dvh.csv",
                        "summary.ini"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  EXPECT_EQ(count_lines(dir / "homotopy.csv"), 1 + 7);
  EXPECT_EQ(count_lines(dir / "dose_profile.csv"), 1 + 33);
  EXPECT_EQ(count_lines(dir / "dvh.csv"), 1 + 11);
  EXPECT_NE(log.str().find("[penalty] gamma/gamma0="), std::string::npos);

  const auto s = read_summary((dir / "summary.ini").string());
  EXPECT_EQ(s.mode, "penalty");
  EXPECT_EQ(s.config, coarse());
  EXPECT_EQ(s.gamma_ratios.size(), 7u);
  EXPECT_EQ(s.final_gamma_ratio, 1.0 / 64.0);
  EXPECT_NEAR(s.gamma0, 2e5, 1e-9);
}

TEST(Experiment, CompareWritesBothModes) {
  const auto dir = scratch_dir("compare");
  std::ostringstream log;
  EXPECT_EQ(run_experiment("compare", coarse(), dir, log), 0);
  EXPECT_TRUE(fs::exists(dir / "penalty" / "summary.ini"));
  EXPECT_TRUE(fs::exists(dir / "constraint" / "summary.ini"));
  const auto s = read_summary((dir / "constraint" / "summary.ini").string());
  EXPECT_EQ(s.mode, "constraint");
  EXPECT_EQ(s.gamma0, 1.0);
}

TEST(Experiment, BetaSweepWritesCombinedTable) {
  auto cfg = coarse();
  cfg.beta_sweep = {1e5, 1e6};
  const auto dir = scratch_dir("sweep");
  std::ostringstream log;
  EXPECT_EQ(run_experiment("beta-sweep", cfg, dir, log), 0);
  EXPECT_EQ(count_lines(dir / "beta_sweep.csv"), 3);
  EXPECT_TRUE(fs::exists(dir / ("beta_" + format_real(1e5)) / "homotopy.csv"));
  EXPECT_TRUE(fs::exists(dir / ("beta_" + format_real(1e6)) / "homotopy.csv"));
}

TEST(Experiment, UnknownVerbIsAConfigError) {
  std::ostringstream log;
  EXPECT_THROW(run_experiment("solve", coarse(), scratch_dir("verb"), log), ConfigError);
}

TEST(Experiment, DataFilesAreByteIdenticalAcrossRuns) {
  const auto a = scratch_dir("det_a"), b = scratch_dir("det_b");
  std::ostringstream log;
  run_experiment("constraint", coarse(), a, log);
  run_experiment("constraint", coarse(), b, log);
  for (const char *f : {"homotopy.csv", "ssn_trace.csv", "dose_profile.csv", "dvh.csv"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}
