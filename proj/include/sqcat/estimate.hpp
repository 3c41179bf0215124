#pragma once

// Inverse problems on population traces: overlap decay fits, blue-sideband
// number-distribution inversion and displaced-squeezed p(n) fits.

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <future>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "sqcat/optimize.hpp"
#include "sqcat/signals.hpp"
#include "sqcat/trace.hpp"

namespace sqcat::estimate {

using opt::MatrixXd;
using opt::VectorXd;

struct FitParam {
  std::string name;
  double value = 0.0;
  double se = 0.0;  // 0 when fixed or when the covariance is singular
  bool fixed = false;
};

struct FitResult {
  std::vector<FitParam> params;
  MatrixXd correlation;  // over the free parameters, in order
  double chi2 = 0.0;
  double residual_norm = 0.0;
  int points = 0;
  int iterations = 0;
  bool converged = false;
  bool singular = false;
  bool degenerate = false;
  std::vector<std::string> warnings;

  const FitParam& operator[](const std::string& name) const {
    for (const auto& p : params)
      if (p.name == name) return p;
    throw std::out_of_range("FitResult: no parameter " + name);
  }
  double value(const std::string& name) const { return (*this)[name].value; }
  double se(const std::string& name) const { return (*this)[name].se; }
  std::vector<std::string> free_names() const {
    std::vector<std::string> out;
    for (const auto& p : params)
      if (!p.fixed) out.push_back(p.name);
    return out;
  }
};

/// Projection-noise standard deviation of a measured P over \p reps shots,
/// using the add-one estimate (k+1)/(reps+2) so that P = 0 or 1 keeps a finite weight.
inline double projection_sigma(double p, int reps) {
  if (reps < 1) throw std::domain_error("projection_sigma: reps < 1");
  const double n = static_cast<double>(reps);
  const double q = (p * n + 1.0) / (n + 2.0);
  return std::sqrt(q * (1.0 - q) / n);
}

namespace detail {

inline void require_points(const PopulationTrace& trace, std::size_t min_points, const char* who) {
  trace.validate();
  if (trace.size() < min_points) {
    throw std::invalid_argument(std::string(who) + ": need at least " + std::to_string(min_points) +
                                " points, got " + std::to_string(trace.size()));
  }
}

inline VectorXd sigmas(const PopulationTrace& trace) {
  VectorXd s(static_cast<Eigen::Index>(trace.size()));
  for (std::size_t i = 0; i < trace.size(); ++i) {
    s[static_cast<Eigen::Index>(i)] = projection_sigma(trace.samples[i].p_down, trace.samples[i].reps);
  }
  return s;
}

/// Assemble a FitResult from an LM run over the free entries of \p values.
inline FitResult collect(const std::vector<std::string>& names, const std::vector<double>& values,
                         const std::vector<bool>& fixed, const opt::LsqResult& lsq, int points) {
  FitResult out;
  out.correlation = lsq.correlation;
  out.chi2 = lsq.chi2;
  out.residual_norm = std::sqrt(lsq.chi2);
  out.points = points;
  out.iterations = lsq.iterations;
  out.converged = lsq.converged;
  out.singular = lsq.singular;
  out.degenerate = lsq.degenerate;
  Eigen::Index k = 0;
  for (std::size_t i = 0; i < names.size(); ++i) {
    FitParam p{names[i], values[i], 0.0, fixed[i]};
    if (!fixed[i]) {
      if (lsq.se.size() > 0) p.se = lsq.se[k];
      ++k;
    }
    out.params.push_back(p);
  }
  if (lsq.singular) out.warnings.push_back("singular covariance: standard errors not reported");
  if (lsq.degenerate) out.warnings.push_back("parameter correlation above 0.95");
  return out;
}

inline void require_convergence(const opt::LsqResult& lsq, const char* who) {
  if (!lsq.converged) {
    throw ConvergenceError(std::string(who) + ": no convergence (LM status " +
                               std::to_string(lsq.status) + ", " + std::to_string(lsq.evaluations) +
                               " evaluations)",
                           lsq.iterations);
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Overlap traces

struct OverlapFitConfig {
  double omega = two_pi_hz(13.25e3);  // rad/s
  double r = 0.0;
  double a = 1.0;
  double b = 1.0;
  double delta_phi = 0.0;  // duration scans
  double tau = 20e-6;      // phase scans, s
  double phi_s = 0.0;      // phase scans, rad
  bool fix_omega = false;
  bool fix_r = false;
  bool fix_a = false;
  bool fix_b = false;
  bool fix_phi_s = false;
  int max_evaluations = 4000;
};

/** \brief Weighted fit of P(down) = (A + B X)/2.
 *
 *  Duration scans fit {omega, r, A, B}; phase scans fit {r, A, B, phi_s} at
 *  fixed tau and omega. Values in \p cfg are the initial guesses, or the
 *  pinned values for fixed parameters. Throws ConvergenceError.
 */
inline FitResult fit_overlap_trace(const PopulationTrace& trace, const OverlapFitConfig& cfg) {
  detail::require_points(trace, 10, "fit_overlap_trace");
  const bool phase = trace.kind == ScanKind::Phase;
  const double omega_unit = two_pi_hz(1e3);

  std::vector<std::string> names;
  std::vector<double> values;
  std::vector<bool> fixed;
  if (phase) {
    names = {"omega", "r", "A", "B", "phi_s"};
    values = {cfg.omega / omega_unit, cfg.r, cfg.a, cfg.b, cfg.phi_s};
    fixed = {true, cfg.fix_r, cfg.fix_a, cfg.fix_b, cfg.fix_phi_s};
  } else {
    names = {"omega", "r", "A", "B"};
    values = {cfg.omega / omega_unit, cfg.r, cfg.a, cfg.b};
    fixed = {cfg.fix_omega, cfg.fix_r, cfg.fix_a, cfg.fix_b};
  }

  const auto m = static_cast<Eigen::Index>(trace.size());
  const VectorXd sigma = detail::sigmas(trace);
  auto unpack = [&](const VectorXd& x) {
    std::vector<double> v = values;
    Eigen::Index k = 0;
    for (std::size_t i = 0; i < v.size(); ++i)
      if (!fixed[i]) v[i] = x[k++];
    v[1] = std::abs(v[1]);
    return v;
  };
  const opt::ResidualFn f = [&](const VectorXd& x) -> VectorXd {
    const auto v = unpack(x);
    const double omega = v[0] * omega_unit;
    VectorXd res(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto& s = trace.samples[static_cast<std::size_t>(i)];
      double abs_alpha, dphi;
      if (phase) {
        abs_alpha = omega * cfg.tau / 2.0;
        dphi = -kPi / 2.0 - s.x / 2.0 - v[4] / 2.0;
      } else {
        abs_alpha = omega * s.x / 2.0;
        dphi = cfg.delta_phi;
      }
      const double x_ov = std::exp(signals::detail::overlap_exponent(abs_alpha * abs_alpha, v[1], dphi));
      res[i] = (s.p_down - 0.5 * (v[2] + v[3] * x_ov)) / sigma[i];
    }
    return res;
  };

  std::vector<double> x0;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!fixed[i]) x0.push_back(values[i]);
  if (x0.empty()) throw std::invalid_argument("fit_overlap_trace: every parameter is fixed");
  opt::LsqOptions lo;
  lo.max_evaluations = cfg.max_evaluations;
  const auto lsq =
      opt::least_squares(f, Eigen::Map<const VectorXd>(x0.data(), static_cast<Eigen::Index>(x0.size())), m, lo);
  detail::require_convergence(lsq, "fit_overlap_trace");

  auto final_values = unpack(lsq.x);
  auto out = detail::collect(names, final_values, fixed, lsq, static_cast<int>(m));
  for (auto& p : out.params) {
    if (p.name == "omega") {
      p.value *= omega_unit;
      p.se *= omega_unit;
    }
    if (p.name == "phi_s") p.value = SqueezeParam{0.0, p.value}.phi_s;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Blue-sideband inversion

struct BsbFitConfig {
  signals::BsbModelParams guess;  // omega_0 <= 0 means "estimate from the spectrum"
  double omega_scan_fraction = 0.3;
  double max_phase_error = 0.5;   // rad, sets the coarse omega_0 grid spacing
  double condition_warning = 1e8;
  std::vector<double> gamma_grid = {0.0, 200.0, 500.0, 1000.0, 2000.0};  // 1/s
};

struct BsbFit {
  fock::NumberDist p;  // sigma holds per-bin standard errors
  FitResult params;    // omega_0, gamma, b
  double condition_number = 0.0;
};

namespace detail {

struct BsbInner {
  VectorXd p;
  VectorXd residual;
  MatrixXd design;  // weighted
};

inline MatrixXd bsb_design(const PopulationTrace& trace, const VectorXd& sigma, double omega_0,
                           double eta, double gamma, int n_max) {
  const auto m = static_cast<Eigen::Index>(trace.size());
  MatrixXd a(m, n_max + 1);
  for (int n = 0; n <= n_max; ++n) {
    const double w = signals::rabi_frequency(n, omega_0, eta);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double t = trace.samples[static_cast<std::size_t>(i)].x;
      a(i, n) = 0.5 * (1.0 + std::exp(-gamma * t) * std::cos(w * t)) / sigma[i];
    }
  }
  return a;
}

/// Non-negative p(n) with sum p <= 1 for fixed (omega_0, gamma, b).
inline BsbInner bsb_inner(const PopulationTrace& trace, const VectorXd& sigma, double omega_0,
                          double eta, double gamma, double b, int n_max) {
  const auto m = static_cast<Eigen::Index>(trace.size());
  BsbInner in;
  in.design = bsb_design(trace, sigma, omega_0, eta, gamma, n_max);
  VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& s = trace.samples[static_cast<std::size_t>(i)];
    y[i] = (s.p_down - b * s.x) / sigma[i];
  }
  in.p = opt::nnls(in.design, y).x;
  double total = in.p.sum();
  if (total > 1.0) {
    // Pin the sum with a heavy row, then rescale the remainder away.
    const double lambda = 1e3 * in.design.cwiseAbs().maxCoeff() * std::sqrt(static_cast<double>(m));
    MatrixXd aug(m + 1, n_max + 1);
    aug.topRows(m) = in.design;
    aug.row(m).setConstant(lambda);
    VectorXd ya(m + 1);
    ya.head(m) = y;
    ya[m] = lambda;
    in.p = opt::nnls(aug, ya).x;
    total = in.p.sum();
    if (total > 1.0) in.p *= (1.0 / total) * (1.0 - 4.0 * std::numeric_limits<double>::epsilon());
  }
  in.residual = y - in.design * in.p;
  return in;
}

/// Residual of the unconstrained-sum solve through the normal equations; for grid searches.
inline double bsb_coarse_cost(const PopulationTrace& trace, const VectorXd& sigma, double omega_0,
                              double eta, double gamma, double b, int n_max) {
  const MatrixXd a = bsb_design(trace, sigma, omega_0, eta, gamma, n_max);
  VectorXd y(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const auto& s = trace.samples[static_cast<std::size_t>(i)];
    y[i] = (s.p_down - b * s.x) / sigma[i];
  }
  const MatrixXd g = a.transpose() * a;
  const double r = opt::nnls_normal(g, a.transpose() * y, y.squaredNorm()).residual_norm;
  return r * r;
}

/// Dominant angular frequency of a trace (resampled to a uniform grid).
inline double spectral_peak(const PopulationTrace& trace) {
  const std::size_t n = trace.size();
  const double t0 = trace.samples.front().x;
  const double t1 = trace.samples.back().x;
  const double dt = (t1 - t0) / static_cast<double>(n - 1);
  std::vector<double> y(n);
  double mean = 0.0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = t0 + dt * static_cast<double>(i);
    while (j + 2 < n && trace.samples[j + 1].x < t) ++j;
    const auto& a = trace.samples[j];
    const auto& b = trace.samples[j + 1];
    const double w = std::clamp((t - a.x) / (b.x - a.x), 0.0, 1.0);
    y[i] = a.p_down + w * (b.p_down - a.p_down);
    mean += y[i];
  }
  mean /= static_cast<double>(n);
  for (auto& v : y) v -= mean;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, y);
  std::size_t best = 1;
  for (std::size_t k = 1; k <= n / 2; ++k)
    if (std::abs(spec[k]) > std::abs(spec[best])) best = k;
  return 2.0 * kPi * static_cast<double>(best) / (dt * static_cast<double>(n));
}

}  // namespace detail

/** \brief Two-stage inversion of a blue-sideband trace.
 *
 *  Outer LM over (omega_0, gamma, b); for each trial the populations come
 *  from a non-negative least-squares solve with sum p <= 1. Populations above
 *  n_max cannot be recovered and are absorbed into the deficit 1 - sum p.
 */
inline BsbFit fit_bsb_trace(const PopulationTrace& trace, const BsbFitConfig& cfg = {}) {
  const auto& g = cfg.guess;
  if (g.n_max < 0 || g.n_max > 29) throw std::invalid_argument("fit_bsb_trace: n_max must be in [0, 29]");
  if (!(g.eta > 0.0)) throw std::invalid_argument("fit_bsb_trace: eta must be > 0");
  detail::require_points(trace, static_cast<std::size_t>(3 * std::max(g.n_max, 1)), "fit_bsb_trace");
  if (trace.kind != ScanKind::Duration) throw SchemaError("fit_bsb_trace: expected a duration scan");

  const int n_max = g.n_max;
  const double eta = g.eta;
  const VectorXd sigma = detail::sigmas(trace);
  const double t_end = trace.samples.back().x;

  // Coarse omega_0 search.
  double lo, hi;
  if (g.omega_0 > 0.0) {
    lo = g.omega_0 * (1.0 - cfg.omega_scan_fraction);
    hi = g.omega_0 * (1.0 + cfg.omega_scan_fraction);
  } else {
    const double peak = detail::spectral_peak(trace);
    double cmin = 1e300, cmax = 0.0;
    for (int n = 0; n <= n_max; ++n) {
      const double c = signals::rabi_frequency(n, 1.0, eta);
      if (c > 0.0) {
        cmin = std::min(cmin, c);
        cmax = std::max(cmax, c);
      }
    }
    lo = 0.7 * peak / cmax;
    hi = 1.3 * peak / cmin;
  }
  double fastest = 0.0;
  for (int n = 0; n <= n_max; ++n) fastest = std::max(fastest, signals::rabi_frequency(n, 1.0, eta));
  const double rel_step = cfg.max_phase_error / (fastest * hi * t_end);
  const int steps = std::max(8, static_cast<int>(std::ceil(std::log(hi / lo) / rel_step)));
  std::vector<double> gammas = {g.gamma};
  for (double gm : cfg.gamma_grid)
    if (gm != g.gamma) gammas.push_back(gm);
  double best_omega = lo, best_gamma = g.gamma, best_cost = 1e300;
  for (int k = 0; k <= steps; ++k) {
    const double omega = lo * std::exp(std::log(hi / lo) * k / steps);
    for (double gm : gammas) {
      const double cost = detail::bsb_coarse_cost(trace, sigma, omega, eta, gm, g.b, n_max);
      if (cost < best_cost) {
        best_cost = cost;
        best_omega = omega;
        best_gamma = gm;
      }
    }
  }

  // Outer LM in scaled units: omega_0 / best, gamma and b in 1/ms.
  const auto m = static_cast<Eigen::Index>(trace.size());
  auto unpack = [&](const VectorXd& x) {
    return std::array<double, 3>{x[0] * best_omega, std::abs(x[1]) * 1e3, x[2] * 1e3};
  };
  const opt::ResidualFn f = [&](const VectorXd& x) -> VectorXd {
    const auto v = unpack(x);
    return detail::bsb_inner(trace, sigma, v[0], eta, v[1], v[2], n_max).residual;
  };
  const auto lsq = opt::least_squares(f, Eigen::Vector3d(1.0, best_gamma * 1e-3, g.b * 1e-3), m);
  detail::require_convergence(lsq, "fit_bsb_trace");
  const auto v = unpack(lsq.x);

  BsbFit out;
  out.params = detail::collect({"omega_0", "gamma", "b"}, {v[0], v[1], v[2]}, {false, false, false},
                               lsq, static_cast<int>(m));
  const double scales[3] = {best_omega, 1e3, 1e3};
  for (int i = 0; i < 3; ++i) out.params.params[i].se *= scales[i];

  const auto inner = detail::bsb_inner(trace, sigma, v[0], eta, v[1], v[2], n_max);
  std::vector<double> p(inner.p.data(), inner.p.data() + inner.p.size());
  out.p = fock::NumberDist::exact(p, std::max(0.0, 1.0 - inner.p.sum()));

  // Per-bin standard errors: free bins from the passive-set covariance,
  // bins held at zero from their conditional variance.
  const MatrixXd& a = inner.design;
  std::vector<Eigen::Index> free_bins;
  for (Eigen::Index n = 0; n <= n_max; ++n)
    if (inner.p[n] > 0.0) free_bins.push_back(n);
  if (!free_bins.empty()) {
    MatrixXd sub(m, static_cast<Eigen::Index>(free_bins.size()));
    for (std::size_t c = 0; c < free_bins.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = a.col(free_bins[c]);
    const MatrixXd normal = sub.transpose() * sub;
    Eigen::FullPivLU<MatrixXd> lu(normal);
    if (lu.isInvertible()) {
      const MatrixXd cov = lu.inverse();
      for (std::size_t c = 0; c < free_bins.size(); ++c) {
        out.p.sigma[free_bins[c]] = std::sqrt(std::max(0.0, cov(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c))));
      }
    }
  }
  for (Eigen::Index n = 0; n <= n_max; ++n) {
    if (inner.p[n] <= 0.0) out.p.sigma[n] = 1.0 / a.col(n).norm();
  }

  Eigen::JacobiSVD<MatrixXd> svd(a);
  const auto sv = svd.singularValues();
  out.condition_number = sv[sv.size() - 1] > 0.0 ? sv[0] / sv[sv.size() - 1] : std::numeric_limits<double>::infinity();
  if (out.condition_number > cfg.condition_warning) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "ill-conditioned design matrix (condition number %.3g)", out.condition_number);
    out.params.warnings.push_back(buf);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Displaced-squeezed p(n) fits

enum class Geometry { SqueezedAxis, AntiSqueezedAxis };

inline double geometry_phi_s(Geometry g) { return g == Geometry::SqueezedAxis ? 0.0 : kPi; }

/// Method-of-moments (r, |alpha|) from mean and variance; smallest r root.
inline std::pair<double, double> moments_guess(double mean, double variance, Geometry g) {
  const double sign = g == Geometry::SqueezedAxis ? -1.0 : 1.0;
  auto excess = [&](double r) {
    const double s2 = std::sinh(r) * std::sinh(r);
    const double a2 = std::max(0.0, mean - s2);
    return a2 * std::exp(sign * 2.0 * r) + 0.5 * std::pow(std::sinh(2.0 * r), 2) - variance;
  };
  double r = 0.0;
  const double r_top = std::asinh(std::sqrt(std::max(mean, 0.0)));
  const double e0 = excess(0.0);
  const int grid = 400;
  for (int k = 1; k <= grid && e0 != 0.0; ++k) {
    const double x = r_top * k / grid;
    if ((excess(x) > 0.0) != (e0 > 0.0)) {
      double a = r_top * (k - 1) / grid, b = x;
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (a + b);
        ((excess(mid) > 0.0) == (e0 > 0.0) ? a : b) = mid;
      }
      r = 0.5 * (a + b);
      break;
    }
  }
  const double s2 = std::sinh(r) * std::sinh(r);
  return {r, std::sqrt(std::max(0.0, mean - s2))};
}

/** \brief Least-squares fit of the displaced-squeezed closed form to p(n).
 *
 *  arg(alpha) = 0 and phi_s = 0 (squeezed axis) or pi (anti-squeezed axis).
 *  kappa stays 1 unless \p fit_kappa. Bins with sigma > 0 everywhere are
 *  weighted by 1/sigma; otherwise the fit is unweighted and the covariance is
 *  scaled by the residual variance.
 */
inline FitResult fit_dsq_pn(const fock::NumberDist& p, Geometry geometry, bool fit_kappa = false) {
  if (p.p.size() < 4) throw std::invalid_argument("fit_dsq_pn: need at least 4 bins");
  double total = 0.0;
  for (double v : p.p) {
    if (!(v >= -1e-12)) throw std::invalid_argument("fit_dsq_pn: negative population");
    total += v;
  }
  if (total > 1.0 + 1e-9) throw std::invalid_argument("fit_dsq_pn: populations sum above 1");
  if (!(total > 0.0)) throw std::invalid_argument("fit_dsq_pn: empty distribution");

  const int n_max = static_cast<int>(p.p.size()) - 1;
  const auto m = static_cast<Eigen::Index>(p.p.size());
  bool weighted = p.sigma.size() == p.p.size();
  for (double s : p.sigma) weighted = weighted && s > 0.0;
  const double phi_s = geometry_phi_s(geometry);

  auto unpack = [&](const VectorXd& x) {
    const double kappa = fit_kappa ? std::min(1.0, std::abs(x[2])) : 1.0;
    return std::array<double, 3>{std::abs(x[0]), std::abs(x[1]), kappa};
  };
  const opt::ResidualFn f = [&](const VectorXd& x) -> VectorXd {
    const auto v = unpack(x);
    const auto model = signals::dsq_number_dist(v[1], {v[0], phi_s}, v[2], n_max);
    VectorXd res(m);
    for (Eigen::Index n = 0; n < m; ++n) {
      res[n] = (p.p[n] - model.p[n]) / (weighted ? p.sigma[n] : 1.0);
    }
    return res;
  };

  const auto mom = p.moments();
  const auto guess = moments_guess(mom.mean, mom.variance, geometry);
  std::vector<Eigen::Vector3d> starts = {{guess.first, guess.second, total},
                                         {0.05, std::sqrt(std::max(mom.mean, 0.01)), total},
                                         {0.5, std::sqrt(std::max(mom.mean - 0.27, 0.01)), total}};
  opt::LsqOptions lo;
  lo.scale_by_residual = !weighted;
  const Eigen::Index k = fit_kappa ? 3 : 2;
  std::optional<opt::LsqResult> best;
  double best_r = 0.0;
  for (const auto& s : starts) {
    auto lsq = opt::least_squares(f, s.head(k), m, lo);
    if (!lsq.converged) continue;
    const double r = std::abs(lsq.x[0]);
    const double tol = 1e-9 * std::max(1.0, best ? best->chi2 : 1.0);
    if (!best || lsq.chi2 < best->chi2 - tol || (std::abs(lsq.chi2 - best->chi2) <= tol && r < best_r)) {
      best = std::move(lsq);
      best_r = r;
    }
  }
  if (!best) throw ConvergenceError("fit_dsq_pn: no start converged", 0);
  const auto v = unpack(best->x);
  auto out = detail::collect({"r", "abs_alpha", "kappa"}, {v[0], v[1], v[2]}, {false, false, !fit_kappa},
                             *best, static_cast<int>(m));
  if (fit_kappa && v[2] >= 1.0) out.warnings.push_back("kappa at its upper bound 1");
  return out;
}

/// Run independent fits concurrently; results keep input order.
template <class Fn>
auto fit_parallel(const std::vector<PopulationTrace>& traces, Fn fn, unsigned threads = 0)
    -> std::vector<decltype(fn(traces.front()))> {
  using R = decltype(fn(traces.front()));
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::optional<R>> slots(traces.size());
  std::vector<std::future<void>> jobs;
  std::atomic<std::size_t> next{0};
  for (unsigned w = 0; w < threads; ++w) {
    jobs.push_back(std::async(std::launch::async, [&] {
      for (std::size_t i = next++; i < traces.size(); i = next++) slots[i].emplace(fn(traces[i]));
    }));
  }
  for (auto& j : jobs) j.get();
  std::vector<R> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace sqcat::estimate
