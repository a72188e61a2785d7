#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "dvhpen/dose.hpp"
#include "oracles.hpp"

using namespace dvhpen;

TEST(Dose, ConstantStateGivesHorizonTimesValue) {
  const auto g = build_grid(-1, 1, 9, 2.0, 8);
  StateField y(g);
  y.fill(0.75);
  const Region r(g, {{-0.5, 0.5}});
  const auto d = apply_C(r, y, g);
  ASSERT_EQ(d.values.size(), r.size());
  for (double v : d.values)
    EXPECT_NEAR(v, 1.5, 1e-15);
}

TEST(Dose, MatchesDenseOperator) {
  std::mt19937_64 rng(5);
  const auto g = build_grid(-1, 1, 5, 1.0, 3);
  const std::vector<Interval> ivs{{-1, -0.5}, {0.5, 1}};
  const Region r(g, ivs);
  const auto C = oracle::dense_C(g, oracle::mask_nodes(g, ivs));
  const auto y = oracle::random_field(g, rng);
  const auto ref = (C * oracle::to_vec(y)).eval();
  const auto d = apply_C(r, y, g);
  for (std::size_t j = 0; j < d.values.size(); ++j)
    EXPECT_NEAR(d.values[j], ref(static_cast<int>(j)), 1e-15);

  // C* is the dense transpose composed with the two sets of weights.
  std::vector<double> mu(r.size());
  for (auto &m : mu)
    m = std::uniform_real_distribution<double>(-1, 1)(rng);
  const auto adj = apply_C_adjoint(DoseField(r, mu), g);
  const auto wq = oracle::weights_Q(g);
  Eigen::VectorXd wmu(static_cast<int>(mu.size()));
  for (std::size_t j = 0; j < mu.size(); ++j)
    wmu(static_cast<int>(j)) = mu[j] * r.weights()[j];
  const Eigen::VectorXd expect = (C.transpose() * wmu).cwiseQuotient(wq);
  EXPECT_LT((oracle::to_vec(adj) - expect).norm(), 1e-13);
}

TEST(Dose, AdjointIdentityAtMachinePrecision) {
  std::mt19937_64 rng(9);
  for (auto [nx, nt] : {std::pair{5, 3}, std::pair{17, 6}, std::pair{64, 20}}) {
    const auto g = build_grid(-1, 1, nx, 1.0, nt);
    const Region r(g, {{-0.8, -0.1}, {0.3, 1.0}});
    for (int trial = 0; trial < 10; ++trial) {
      const auto y = oracle::random_field(g, rng);
      std::vector<double> mu(r.size());
      for (auto &m : mu)
        m = std::uniform_real_distribution<double>(-1, 1)(rng);
      const DoseField dm(r, mu);
      const double lhs = inner_product_region(apply_C(r, y, g), dm);
      const double rhs = inner_product_Q(y, apply_C_adjoint(dm, g), g);
      EXPECT_LT(std::abs(lhs - rhs), 1e-11 * std::abs(lhs));
    }
  }
}

TEST(Dose, AddAdjointAccumulates) {
  const auto g = build_grid(-1, 1, 9, 1.0, 3);
  const Region r(g, {{0, 1}});
  const DoseField mu(r, 2.0);
  SpaceTimeArray acc(g);
  acc.fill(1.0);
  add_C_adjoint(0.5, mu, acc);
  auto expect = apply_C_adjoint(mu, g);
  expect.scale(0.5);
  for (int k = 0; k < g.nt; ++k)
    for (int i = 0; i < g.nx; ++i)
      EXPECT_DOUBLE_EQ(acc(k, i), 1.0 + expect(k, i));
}

TEST(Dose, VolumeFractionsAreWeightedAndStrict) {
  const auto g = build_grid(0, 1, 5, 1.0, 1); // weights 1/8, 1/4, 1/4, 1/4, 1/8
  const Region r = Region::domain(g);
  const DoseField d(r, std::vector<double>{0.1, 0.5, 0.5, 0.9, 0.2});
  EXPECT_NEAR(volume_fraction_above(d, 0.5), 0.25, 1e-15);
  EXPECT_NEAR(volume_fraction_below(d, 0.5), 0.125 + 0.125, 1e-15);
  EXPECT_NEAR(volume_fraction_above(d, 0.0), 1.0, 1e-15);
  EXPECT_NEAR(volume_fraction_below(d, 0.0), 0.0, 1e-15);
}

TEST(Dose, ReferenceFractionsAreNodeRatios) {
  const auto g = build_grid(-1, 1, 256, 1.0, 256);
  const Region risk(g, {{-0.7, -0.55}, {-0.2, 0.2}, {0.55, 0.7}});
  std::vector<double> v(risk.size(), 0.0);
  for (int j = 0; j < 10; ++j)
    v[static_cast<std::size_t>(40 + j)] = 1.0; // ten interior nodes of the middle interval
  const DoseField d(risk, v);
  EXPECT_NEAR(100.0 * volume_fraction_above(d, 0.2), 11.11, 0.005);
}

TEST(Dvh, ConstantDoseGivesUnitStep) {
  const auto g = build_grid(-1, 1, 9, 1.0, 2);
  const Region r(g, {{-0.5, 0.5}});
  const DoseField d(r, 0.5);
  const auto levels = linspace(0.0, 0.6, 13);
  const auto curve = dvh_curve(d, levels);
  for (std::size_t j = 0; j < levels.size(); ++j)
    EXPECT_EQ(curve.fraction[j], levels[j] <= 0.5 + 1e-15 ? 1.0 : 0.0) << levels[j];
}

TEST(Dvh, IsNonIncreasingInLevel) {
  std::mt19937_64 rng(1);
  const auto g = build_grid(-1, 1, 33, 1.0, 2);
  const Region r = Region::domain(g);
  std::vector<double> v(r.size());
  for (auto &x : v)
    x = std::uniform_real_distribution<double>(0, 1)(rng);
  const auto curve = dvh_curve(DoseField(r, v), linspace(0.0, 1.2, 200));
  for (std::size_t j = 1; j < curve.fraction.size(); ++j)
    EXPECT_LE(curve.fraction[j], curve.fraction[j - 1]);
  EXPECT_EQ(curve.fraction.front(), 1.0);
  EXPECT_EQ(curve.fraction.back(), 0.0);
}

TEST(Dvh, RejectsUnsortedLevels) {
  const auto g = build_grid(-1, 1, 9, 1.0, 2);
  const DoseField d(Region::domain(g), 0.5);
  EXPECT_THROW(dvh_curve(d, {0.0, 0.5, 0.5}), ConfigError);
}

TEST(Dvh, LinspaceHitsEndpoints) {
  const auto l = linspace(0.0, 0.6, 200);
  ASSERT_EQ(l.size(), 200u);
  EXPECT_EQ(l.front(), 0.0);
  EXPECT_EQ(l.back(), 0.6);
}
