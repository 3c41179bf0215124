#pragma once

// Closed-form observables of squeezed-wavepacket cat states: branch overlap,
// spin populations, displaced-squeezed number statistics and sideband signals.

#include <cmath>
#include <vector>

#include "sqcat/fock.hpp"
#include "sqcat/number_stats.hpp"
#include "sqcat/sideband.hpp"
#include "sqcat/types.hpp"

namespace sqcat::signals {

using fock::NumberDist;

/// Branch displacement and squeezing; delta_phi = arg(alpha) - phi_s/2 is derived.
class OverlapParams {
 public:
  OverlapParams(Complex alpha, const SqueezeParam& xi) : alpha_(alpha), xi_(xi) {}

  /// Scan form: |alpha| and delta_phi given directly (phi_s = 0).
  static OverlapParams from_delta_phi(double abs_alpha, double r, double delta_phi) {
    return {std::polar(abs_alpha, delta_phi), SqueezeParam{r, 0.0}};
  }

  Complex alpha() const { return alpha_; }
  const SqueezeParam& xi() const { return xi_; }
  double delta_phi() const { return std::arg(alpha_) - xi_.phi_s / 2.0; }

 private:
  Complex alpha_;
  SqueezeParam xi_;
};

namespace detail {
inline double overlap_exponent(double abs_alpha2, double r, double delta_phi) {
  const double c = std::cos(delta_phi);
  const double s = std::sin(delta_phi);
  return -2.0 * abs_alpha2 * (std::exp(2.0 * r) * c * c + std::exp(-2.0 * r) * s * s);
}
}  // namespace detail

/// X = <alpha,xi|-alpha,xi>.
inline double overlap_x(const OverlapParams& p) {
  return std::exp(detail::overlap_exponent(std::norm(p.alpha()), p.xi().r, p.delta_phi()));
}

inline void check_contrast(double a, double b) {
  if (!(a >= 0.0 && a <= 2.0 && b >= 0.0 && b <= 2.0 && a + b <= 2.0 + 1e-12)) {
    throw std::domain_error("spin population model: need A, B in [0, 2] and A + B <= 2");
  }
}

/// P(down) = (A + B X(alpha(tau), xi)) / 2 for a force of duration tau.
inline double spin_population_model(double tau, double omega, double r, double delta_phi,
                                     double a, double b) {
  check_contrast(a, b);
  const double abs_alpha = omega * tau / 2.0;
  return 0.5 * (a + b * std::exp(detail::overlap_exponent(abs_alpha * abs_alpha, r, delta_phi)));
}

/// Same model as a function of the drive phase phi_D at fixed tau. The branch
/// displacement points along -i e^{-i phi_D/2}, so delta_phi = -pi/2 - phi_D/2 - phi_s/2.
inline double phase_scan_model(double phi_d, double tau, double omega, const SqueezeParam& xi,
                               double a, double b) {
  const double delta_phi = -kPi / 2.0 - phi_d / 2.0 - xi.phi_s / 2.0;
  return spin_population_model(tau, omega, xi.r, delta_phi, a, b);
}

/// p(n), n = 0..n_max, of |alpha, xi> scaled by kappa.
inline NumberDist dsq_number_dist(Complex alpha, const SqueezeParam& xi, double kappa,
                                  int n_max) {
  if (!(kappa > 0.0 && kappa <= 1.0)) throw std::domain_error("dsq_number_dist: kappa outside (0, 1]");
  if (n_max < 0) throw std::domain_error("dsq_number_dist: n_max < 0");
  auto p = dsq_probabilities(alpha, xi, n_max + 1);
  double total = 0.0;
  for (auto& v : p) {
    total += v;
    v *= kappa;
  }
  return NumberDist::exact(std::move(p), kappa * std::max(0.0, 1.0 - total));
}

inline NumberMoments dsq_moments(Complex alpha, const SqueezeParam& xi) {
  return caves_moments(alpha, xi);
}

/// Q = (var - mean) / mean.
inline double mandel_q(double mean, double variance) {
  if (!(mean > 0.0)) throw std::domain_error("mandel_q: mean must be > 0");
  return (variance - mean) / mean;
}

/// Blue-sideband Rabi frequency |n> -> |n+1> with the full Laguerre form.
inline double rabi_frequency(int n, double omega_0, double eta) {
  if (n < 0) throw std::domain_error("rabi_frequency: n < 0");
  return omega_0 * std::abs(sideband_coupling(n, eta));
}

struct BsbModelParams {
  double omega_0 = 0.0;  // rad/s
  double eta = 0.05;
  double gamma = 0.0;    // 1/s
  double b = 0.0;        // 1/s
  int n_max = 29;

  void validate() const {
    if (!(gamma >= 0.0)) throw std::domain_error("BsbModelParams: gamma must be >= 0");
    if (n_max < 0) throw std::domain_error("BsbModelParams: n_max < 0");
  }
};

/// Per-level basis function 1/2 (1 + e^{-gamma t} cos(Omega_{n,n+1} t)).
inline double bsb_basis(double t, int n, double omega_0, double eta, double gamma) {
  return 0.5 * (1.0 + std::exp(-gamma * t) * std::cos(rabi_frequency(n, omega_0, eta) * t));
}

/// P(down) = b t + 1/2 sum_n p(n) (1 + e^{-gamma t} cos(Omega_{n,n+1} t)).
inline double bsb_signal(double t, const NumberDist& p, const BsbModelParams& m) {
  m.validate();
  double acc = m.b * t;
  const int top = std::min(m.n_max, static_cast<int>(p.p.size()) - 1);
  for (int n = 0; n <= top; ++n) acc += p.p[n] * bsb_basis(t, n, m.omega_0, m.eta, m.gamma);
  return acc;
}

inline std::vector<double> bsb_trace(const std::vector<double>& times, const NumberDist& p,
                                     const BsbModelParams& m) {
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(bsb_signal(t, p, m));
  return out;
}

/** \brief Number of consecutive local extrema, from the start of a sampled
 *  trace, whose distance from \p baseline is at least \p threshold. Counting
 *  stops at the first extremum inside the band (the collapse).
 */
inline int oscillations_before_collapse(const std::vector<double>& trace, double baseline,
                                        double threshold = 0.1) {
  int count = 0;
  for (std::size_t i = 1; i + 1 < trace.size(); ++i) {
    const double left = trace[i] - trace[i - 1];
    const double right = trace[i + 1] - trace[i];
    if (left == 0.0 || (left > 0.0) == (right > 0.0)) continue;
    if (std::abs(trace[i] - baseline) < threshold) break;
    ++count;
  }
  return count;
}

struct ContrastResult {
  Complex alpha_r;
  double overlap = 1.0;      // X(alpha_R, xi)
  double improvement = 1.0;  // X(alpha_R, xi) / X(alpha_R, 0)
};

/** \brief Residual displacement and contrast of a cat interferometer after an
 *  oscillator phase slip delta_theta: alpha_R = 2 i alpha sin(delta_theta/2).
 */
inline ContrastResult interferometer_contrast(Complex alpha, double delta_theta,
                                              const SqueezeParam& xi) {
  ContrastResult res;
  res.alpha_r = 2.0 * kI * alpha * std::sin(delta_theta / 2.0);
  if (res.alpha_r == Complex{0.0, 0.0}) return res;
  const double a2 = std::norm(res.alpha_r);
  const double dphi = std::arg(res.alpha_r) - xi.phi_s / 2.0;
  const double squeezed = detail::overlap_exponent(a2, xi.r, dphi);
  const double coherent = -2.0 * a2;
  res.overlap = std::exp(squeezed);
  res.improvement = std::exp(squeezed - coherent);
  return res;
}

}  // namespace sqcat::signals
