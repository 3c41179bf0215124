#pragma once

// Weighted nonlinear least squares (damped Gauss-Newton via Eigen's MINPACK
// port) and Lawson-Hanson non-negative least squares.

#include <Eigen/Dense>
#include <unsupported/Eigen/LevenbergMarquardt>

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "sqcat/types.hpp"

namespace sqcat::opt {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Maps parameters to weighted residuals (y - model) / sigma.
using ResidualFn = std::function<VectorXd(const VectorXd&)>;

struct LsqOptions {
  int max_evaluations = 4000;
  double xtol = 1e-12;
  double ftol = 1e-14;
  /// Multiply the covariance by chi2 / (m - k); for unweighted residuals.
  bool scale_by_residual = false;
  double degeneracy_threshold = 0.95;
  double singular_rcond = 1e-12;
};

struct LsqResult {
  VectorXd x;
  VectorXd se;           // empty when the covariance is singular
  MatrixXd correlation;  // empty when the covariance is singular
  double chi2 = 0.0;     // sum of squared weighted residuals
  bool converged = false;
  bool singular = false;
  bool degenerate = false;  // some |corr| above the threshold
  int iterations = 0;
  int evaluations = 0;
  int status = 0;
};

namespace detail {

struct LmFunctor {
  using Scalar = double;
  using InputType = VectorXd;
  using ValueType = VectorXd;
  using JacobianType = MatrixXd;
  using QRSolver = Eigen::ColPivHouseholderQR<MatrixXd>;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  const ResidualFn* f = nullptr;
  Eigen::Index n = 0, m = 0;

  Eigen::Index inputs() const { return n; }
  Eigen::Index values() const { return m; }
  int operator()(const VectorXd& x, VectorXd& fvec) const {
    fvec = (*f)(x);
    return 0;
  }
};

/// Central-difference Jacobian of f at x.
inline MatrixXd jacobian(const ResidualFn& f, const VectorXd& x, Eigen::Index m) {
  MatrixXd jac(m, x.size());
  const double h0 = std::cbrt(std::numeric_limits<double>::epsilon());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = h0 * std::max(1.0, std::abs(x[j]));
    VectorXd xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    jac.col(j) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return jac;
}

}  // namespace detail

/// Fill se/correlation of \p res from the Jacobian at res.x.
inline void attach_covariance(LsqResult& res, const ResidualFn& f, Eigen::Index m,
                              const LsqOptions& opt = {}) {
  const Eigen::Index k = res.x.size();
  const MatrixXd jac = detail::jacobian(f, res.x, m);
  const MatrixXd normal = jac.transpose() * jac;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(normal);
  const double top = eig.eigenvalues().cwiseAbs().maxCoeff();
  if (!(top > 0.0) || eig.eigenvalues().minCoeff() <= opt.singular_rcond * top) {
    res.singular = true;
    res.se.resize(0);
    res.correlation.resize(0, 0);
    return;
  }
  MatrixXd cov = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
                 eig.eigenvectors().transpose();
  if (opt.scale_by_residual && m > k) cov *= res.chi2 / static_cast<double>(m - k);
  res.se = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  res.correlation = MatrixXd::Identity(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      if (i == j) continue;
      const double d = res.se[i] * res.se[j];
      res.correlation(i, j) = d > 0.0 ? cov(i, j) / d : 0.0;
      if (std::abs(res.correlation(i, j)) > opt.degeneracy_threshold) res.degenerate = true;
    }
  }
}

/** \brief Minimize |f(x)|^2 from \p x0.
 *
 *  \p m is the residual count. Standard errors come from the inverse of
 *  J^T J at the solution.
 */
inline LsqResult least_squares(const ResidualFn& f, const VectorXd& x0, Eigen::Index m,
                               const LsqOptions& opt = {}) {
  if (m < x0.size()) throw DimensionError("least_squares: fewer residuals than parameters");
  detail::LmFunctor functor;
  functor.f = &f;
  functor.n = x0.size();
  functor.m = m;
  Eigen::NumericalDiff<detail::LmFunctor, Eigen::Central> numdiff(functor);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<detail::LmFunctor, Eigen::Central>> lm(numdiff);
  lm.setMaxfev(opt.max_evaluations);
  lm.setXtol(opt.xtol);
  lm.setFtol(opt.ftol);

  LsqResult res;
  res.x = x0;
  const auto status = lm.minimize(res.x);
  res.status = static_cast<int>(status);
  res.iterations = static_cast<int>(lm.iterations());
  res.evaluations = static_cast<int>(lm.nfev());
  using S = Eigen::LevenbergMarquardtSpace::Status;
  res.converged = status == S::RelativeReductionTooSmall || status == S::RelativeErrorTooSmall ||
                  status == S::RelativeErrorAndReductionTooSmall || status == S::CosinusTooSmall ||
                  status == S::FtolTooSmall || status == S::XtolTooSmall ||
                  status == S::GtolTooSmall;
  res.chi2 = f(res.x).squaredNorm();
  if (res.converged) attach_covariance(res, f, m, opt);
  return res;
}

struct NnlsResult {
  VectorXd x;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

/// Lawson-Hanson iterations; \p solve(passive, z) fills z on the passive set
/// and \p gradient(x) returns A^T (b - A x).
template <class Solve, class Gradient>
NnlsResult lawson_hanson(Eigen::Index n, double tol, int max_iter, Solve solve, Gradient gradient) {
  NnlsResult res;
  res.x = VectorXd::Zero(n);
  std::vector<bool> passive(n, false);
  VectorXd w = gradient(res.x);
  while (res.iterations < max_iter) {
    Eigen::Index best = -1;
    double best_w = tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!passive[j] && w[j] > best_w) {
        best_w = w[j];
        best = j;
      }
    }
    if (best < 0) {
      res.converged = true;
      break;
    }
    passive[best] = true;
    VectorXd z;
    for (;;) {
      ++res.iterations;
      solve(passive, z);
      bool feasible = true;
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[j] && z[j] <= 0.0) feasible = false;
      if (feasible) break;
      double step = 1.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[j] && z[j] <= 0.0) step = std::min(step, res.x[j] / (res.x[j] - z[j]));
      }
      res.x += step * (z - res.x);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[j] && res.x[j] <= tol) {
          passive[j] = false;
          res.x[j] = 0.0;
        }
      }
      if (res.iterations >= max_iter) break;
    }
    res.x = z.cwiseMax(0.0);
    for (Eigen::Index j = 0; j < n; ++j)
      if (!passive[j]) res.x[j] = 0.0;
    w = gradient(res.x);
  }
  return res;
}

inline std::vector<Eigen::Index> indices(const std::vector<bool>& mask) {
  std::vector<Eigen::Index> idx;
  for (std::size_t j = 0; j < mask.size(); ++j)
    if (mask[j]) idx.push_back(static_cast<Eigen::Index>(j));
  return idx;
}

}  // namespace detail

/// Lawson-Hanson active-set solve of min |A x - b| subject to x >= 0.
inline NnlsResult nnls(const MatrixXd& a, const VectorXd& b, int max_iter = 0) {
  const Eigen::Index n = a.cols();
  if (a.rows() != b.size()) throw DimensionError("nnls: row count mismatch");
  if (max_iter <= 0) max_iter = static_cast<int>(3 * n + 30);
  const double tol = 10.0 * std::numeric_limits<double>::epsilon() *
                     a.cwiseAbs().colwise().sum().maxCoeff() * static_cast<double>(std::max(a.rows(), n));
  auto solve = [&](const std::vector<bool>& passive, VectorXd& z) {
    const auto idx = detail::indices(passive);
    MatrixXd sub(a.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = a.col(idx[c]);
    const VectorXd zs = sub.colPivHouseholderQr().solve(b);
    z = VectorXd::Zero(n);
    for (std::size_t c = 0; c < idx.size(); ++c) z[idx[c]] = zs[static_cast<Eigen::Index>(c)];
  };
  auto gradient = [&](const VectorXd& x) -> VectorXd { return a.transpose() * (b - a * x); };
  auto res = detail::lawson_hanson(n, tol, max_iter, solve, gradient);
  res.residual_norm = (a * res.x - b).norm();
  return res;
}

/** \brief Same problem posed through the normal equations G = A^T A,
 *  h = A^T b and bb = b^T b. Cheaper for tall A; squares the condition number.
 */
inline NnlsResult nnls_normal(const MatrixXd& g, const VectorXd& h, double bb, int max_iter = 0) {
  const Eigen::Index n = g.cols();
  if (g.rows() != n || h.size() != n) throw DimensionError("nnls_normal: shape mismatch");
  if (max_iter <= 0) max_iter = static_cast<int>(3 * n + 30);
  const double tol = 1e3 * std::numeric_limits<double>::epsilon() * std::max(1.0, g.diagonal().maxCoeff());
  auto solve = [&](const std::vector<bool>& passive, VectorXd& z) {
    const auto idx = detail::indices(passive);
    const auto k = static_cast<Eigen::Index>(idx.size());
    MatrixXd sub(k, k);
    VectorXd rhs(k);
    for (Eigen::Index r = 0; r < k; ++r) {
      rhs[r] = h[idx[r]];
      for (Eigen::Index c = 0; c < k; ++c) sub(r, c) = g(idx[r], idx[c]);
    }
    const VectorXd zs = sub.ldlt().solve(rhs);
    z = VectorXd::Zero(n);
    for (Eigen::Index c = 0; c < k; ++c) z[idx[c]] = zs[c];
  };
  auto gradient = [&](const VectorXd& x) -> VectorXd { return h - g * x; };
  auto res = detail::lawson_hanson(n, tol, max_iter, solve, gradient);
  res.residual_norm = std::sqrt(std::max(0.0, bb - 2.0 * res.x.dot(h) + res.x.dot(g * res.x)));
  return res;
}

}  // namespace sqcat::opt
