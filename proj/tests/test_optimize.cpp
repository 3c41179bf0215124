#include <gtest/gtest.h>

#include <random>

#include "sqcat/optimize.hpp"

namespace {

using namespace sqcat::opt;

/// Exhaustive oracle: best feasible unconstrained solve over every support set.
VectorXd brute_force_nnls(const MatrixXd& a, const VectorXd& b) {
  const int n = static_cast<int>(a.cols());
  VectorXd best = VectorXd::Zero(n);
  double best_r = b.norm();
  for (int mask = 1; mask < (1 << n); ++mask) {
    std::vector<int> idx;
    for (int j = 0; j < n; ++j)
      if (mask & (1 << j)) idx.push_back(j);
    MatrixXd sub(a.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) sub.col(c) = a.col(idx[c]);
    const VectorXd z = sub.colPivHouseholderQr().solve(b);
    if (z.minCoeff() < 0.0) continue;
    VectorXd x = VectorXd::Zero(n);
    for (std::size_t c = 0; c < idx.size(); ++c) x[idx[c]] = z[c];
    const double r = (a * x - b).norm();
    if (r < best_r) {
      best_r = r;
      best = x;
    }
  }
  return best;
}

TEST(Nnls, MatchesExhaustiveSearch) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + trial % 6;
    MatrixXd a(n + 5, n);
    VectorXd b(n + 5);
    for (int i = 0; i < a.rows(); ++i) {
      b[i] = g(rng);
      for (int j = 0; j < n; ++j) a(i, j) = g(rng);
    }
    const auto res = nnls(a, b);
    ASSERT_TRUE(res.converged);
    EXPECT_GE(res.x.minCoeff(), 0.0);
    const VectorXd oracle = brute_force_nnls(a, b);
    EXPECT_NEAR(res.residual_norm, (a * oracle - b).norm(), 1e-10);
    EXPECT_LT((res.x - oracle).norm(), 1e-8);
  }
}

TEST(Nnls, NormalEquationFormAgrees) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + trial % 5;
    MatrixXd a(40, n);
    VectorXd b(40);
    for (int i = 0; i < 40; ++i) {
      b[i] = g(rng);
      for (int j = 0; j < n; ++j) a(i, j) = g(rng);
    }
    const auto qr = nnls(a, b);
    const auto ne = nnls_normal(a.transpose() * a, a.transpose() * b, b.squaredNorm());
    EXPECT_LT((qr.x - ne.x).norm(), 1e-9);
    EXPECT_NEAR(qr.residual_norm, ne.residual_norm, 1e-7);
  }
}

TEST(Nnls, ExactNonNegativeSolutionIsRecovered) {
  MatrixXd a(6, 3);
  a << 1, 0, 2, 0, 1, 1, 1, 1, 0, 3, 0, 1, 0, 2, 0, 1, 1, 1;
  const VectorXd x(Eigen::Vector3d(0.5, 0.0, 1.5));
  const auto res = nnls(a, a * x);
  EXPECT_LT((res.x - x).norm(), 1e-12);
  EXPECT_THROW(nnls(a, VectorXd::Zero(5)), sqcat::DimensionError);
}

TEST(LeastSquares, LinearModelMatchesNormalEquations) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 0.3);
  const int m = 40;
  VectorXd t(m), y(m), sigma(m);
  for (int i = 0; i < m; ++i) {
    t[i] = 0.1 * i;
    sigma[i] = 0.2 + 0.01 * i;
    y[i] = 1.5 - 0.7 * t[i] + sigma[i] * g(rng);
  }
  const ResidualFn f = [&](const VectorXd& p) -> VectorXd {
    return ((y.array() - p[0] - p[1] * t.array()) / sigma.array()).matrix();
  };
  const auto res = least_squares(f, VectorXd::Zero(2), m);
  ASSERT_TRUE(res.converged);
  MatrixXd x(m, 2);
  x.col(0) = sigma.cwiseInverse();
  x.col(1) = t.cwiseQuotient(sigma);
  const MatrixXd normal = x.transpose() * x;
  const VectorXd beta = normal.ldlt().solve(x.transpose() * y.cwiseQuotient(sigma));
  const MatrixXd cov = normal.inverse();
  EXPECT_NEAR(res.x[0], beta[0], 1e-9);
  EXPECT_NEAR(res.x[1], beta[1], 1e-9);
  EXPECT_NEAR(res.se[0], std::sqrt(cov(0, 0)), 1e-7);
  EXPECT_NEAR(res.se[1], std::sqrt(cov(1, 1)), 1e-7);
  EXPECT_NEAR(res.correlation(0, 1), cov(0, 1) / std::sqrt(cov(0, 0) * cov(1, 1)), 1e-7);
}

TEST(LeastSquares, NonlinearDecayAndDegeneracyFlag) {
  const int m = 30;
  VectorXd t = VectorXd::LinSpaced(m, 0.0, 3.0);
  const ResidualFn f = [&](const VectorXd& p) -> VectorXd {
    return (2.0 * (-1.3 * t.array()).exp() - p[0] * (-p[1] * t.array()).exp()).matrix();
  };
  const auto res = least_squares(f, Eigen::Vector2d(1.0, 0.5), m);
  ASSERT_TRUE(res.converged);
  EXPECT_NEAR(res.x[0], 2.0, 1e-8);
  EXPECT_NEAR(res.x[1], 1.3, 1e-8);

  // Only the product p0 * p1 is identifiable.
  const ResidualFn g = [&](const VectorXd& p) -> VectorXd {
    return (t.array() * 3.0 - p[0] * p[1] * t.array()).matrix();
  };
  const auto deg = least_squares(g, Eigen::Vector2d(1.0, 1.0), m);
  EXPECT_TRUE(deg.singular || deg.degenerate);
  EXPECT_NEAR(deg.x[0] * deg.x[1], 3.0, 1e-8);
}

}  // namespace
