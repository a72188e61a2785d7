#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "dvhpen/krylov.hpp"

using namespace dvhpen;

namespace {

struct Vec {
  Eigen::VectorXd v;
  void axpy(double a, const Vec &x) { v += a * x.v; }
  void scale(double a) { v *= a; }
};

double dot(const Vec &a, const Vec &b) { return a.v.dot(b.v); }

Eigen::MatrixXd test_matrix(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1, 1);
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      A(i, j) = d(rng) / n;
  A += 2.0 * Eigen::MatrixXd::Identity(n, n);
  return A;
}

} // namespace

TEST(Gmres, SolvesNonsymmetricSystem) {
  const int n = 40;
  const auto A = test_matrix(n, 4);
  Vec b{Eigen::VectorXd::LinSpaced(n, -1.0, 2.0)};
  Vec x{};
  const auto res = gmres([&](const Vec &p) { return Vec{A * p.v}; }, b, x, dot,
                         GmresOptions{200, 1e-12});
  EXPECT_TRUE(res.converged);
  const Eigen::VectorXd ref = A.partialPivLu().solve(b.v);
  EXPECT_LT((x.v - ref).norm(), 1e-10 * ref.norm());
  EXPECT_LE(res.iterations, n);
}

TEST(Gmres, ResidualHistoryIsNonIncreasing) {
  const auto A = test_matrix(30, 8);
  Vec b{Eigen::VectorXd::Ones(30)};
  Vec x{};
  const auto res =
      gmres([&](const Vec &p) { return Vec{A * p.v}; }, b, x, dot, GmresOptions{100, 1e-14});
  ASSERT_FALSE(res.history.empty());
  EXPECT_LE(res.history.front(), res.initial_residual);
  for (std::size_t j = 1; j < res.history.size(); ++j)
    EXPECT_LE(res.history[j], res.history[j - 1] * (1.0 + 1e-12));
  // the least-squares estimate agrees with the true residual
  EXPECT_NEAR((b.v - A * x.v).norm(), res.residual, 1e-10);
}

TEST(Gmres, ZeroRightHandSide) {
  const auto A = test_matrix(5, 1);
  Vec b{Eigen::VectorXd::Zero(5)};
  Vec x{Eigen::VectorXd::Ones(5)};
  const auto res =
      gmres([&](const Vec &p) { return Vec{A * p.v}; }, b, x, dot, GmresOptions{});
  EXPECT_TRUE(res.converged);
  EXPECT_EQ(res.iterations, 0);
  EXPECT_EQ(x.v.norm(), 0.0);
}

TEST(Gmres, IdentityBreaksDownAfterOneStep) {
  Vec b{Eigen::VectorXd::LinSpaced(7, 1.0, 7.0)};
  Vec x{};
  const auto res = gmres([](const Vec &p) { return p; }, b, x, dot, GmresOptions{});
  EXPECT_TRUE(res.converged);
  EXPECT_EQ(res.iterations, 1);
  EXPECT_LT((x.v - b.v).norm(), 1e-14 * b.v.norm());
}

TEST(Gmres, IterationCapReturnsBestIterate) {
  const auto A = test_matrix(50, 2);
  Vec b{Eigen::VectorXd::Ones(50)};
  Vec x{};
  const auto res =
      gmres([&](const Vec &p) { return Vec{A * p.v}; }, b, x, dot, GmresOptions{3, 1e-14});
  EXPECT_FALSE(res.converged);
  EXPECT_EQ(res.iterations, 3);
  EXPECT_LT((b.v - A * x.v).norm(), b.v.norm());
}

TEST(Gmres, WeightedInnerProduct) {
  // A is self-adjoint in <a,b>_W = a^T W b; GMRES must work in that geometry.
  const int n = 12;
  Eigen::VectorXd w = Eigen::VectorXd::LinSpaced(n, 0.5, 3.0);
  const auto B = test_matrix(n, 3);
  const Eigen::MatrixXd S = B.transpose() * B;
  const Eigen::MatrixXd A = w.cwiseInverse().asDiagonal() * S;
  const auto wdot = [&](const Vec &a, const Vec &b) { return a.v.dot(w.asDiagonal() * b.v); };
  Vec b{Eigen::VectorXd::Ones(n)};
  Vec x{};
  const auto res =
      gmres([&](const Vec &p) { return Vec{A * p.v}; }, b, x, wdot, GmresOptions{100, 1e-13});
  EXPECT_TRUE(res.converged);
  EXPECT_LT((A * x.v - b.v).norm(), 1e-10);
}
