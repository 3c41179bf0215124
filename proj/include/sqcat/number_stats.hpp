#pragma once

// Closed-form number statistics of displaced-squeezed states D(alpha)S(xi)|0>.
// Shared by the Fock-space sizing rule and the signal models.

#include <cmath>
#include <vector>

#include "sqcat/types.hpp"

namespace sqcat {

/// Squeezing parameter xi = r * exp(i phi_s).
struct SqueezeParam {
  double r = 0.0;
  double phi_s = 0.0;

  SqueezeParam() = default;
  SqueezeParam(double magnitude, double phase) : r(magnitude), phi_s(wrap(phase)) {
    if (!(magnitude >= 0.0) || !std::isfinite(magnitude)) {
      throw std::domain_error("SqueezeParam: r must be finite and >= 0");
    }
  }

  Complex xi() const { return std::polar(r, phi_s); }

  /// Reduction of the squeezed-quadrature variance, in dB.
  double reduction_db() const { return 20.0 / std::log(10.0) * r; }

  static SqueezeParam from_db(double db, double phase = 0.0) {
    return {db * std::log(10.0) / 20.0, phase};
  }

 private:
  static double wrap(double phase) {
    double w = std::fmod(phase, 2.0 * kPi);
    if (w < 0.0) w += 2.0 * kPi;
    return w;
  }
};

struct NumberMoments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Mean and variance of n for |alpha, xi> (Caves).
inline NumberMoments caves_moments(Complex alpha, const SqueezeParam& xi) {
  const double ch = std::cosh(xi.r);
  const double sh = std::sinh(xi.r);
  const Complex shifted = alpha * ch - std::conj(alpha) * std::polar(1.0, xi.phi_s) * sh;
  return {std::norm(alpha) + sh * sh, std::norm(shifted) + 2.0 * ch * ch * sh * sh};
}

/** \brief p(n), n = 0..count-1, of |alpha, xi> from the Hermite closed form.
 *
 *  Evaluates |H_n(z)|^2 (tanh(r)/2)^n / n! through the rescaled sequence
 *  g_n = H_n(z) (tanh(r)/2)^{n/2} / sqrt(n!), which obeys
 *    g_{n+1} = (w g_n - sqrt(n) tanh(r) g_{n-1}) / sqrt(n+1),
 *    w = (alpha + alpha^* e^{i phi_s} tanh r) e^{-i phi_s/2}.
 *  The sequence is finite at r = 0 (coherent state) and carries a running
 *  log scale so large |alpha| cannot overflow.
 */
inline std::vector<double> dsq_probabilities(Complex alpha, const SqueezeParam& xi,
                                             int count) {
  std::vector<double> p(static_cast<std::size_t>(std::max(count, 0)), 0.0);
  if (count <= 0) return p;
  const double th = std::tanh(xi.r);
  const Complex phase = std::polar(1.0, xi.phi_s);
  const Complex w = (alpha + std::conj(alpha) * phase * th) * std::polar(1.0, -xi.phi_s / 2.0);
  const Complex exponent =
      -std::norm(alpha) - 0.5 * (std::conj(alpha) * std::conj(alpha) * phase +
                                 alpha * alpha * std::conj(phase)) * th;
  const double log_prefactor = exponent.real() - std::log(std::cosh(xi.r));

  Complex prev{0.0, 0.0};
  Complex cur{1.0, 0.0};
  double log_scale = 0.0;  // true g_n = cur * exp(log_scale)
  for (int n = 0; n < count; ++n) {
    const double mag2 = std::norm(cur);
    p[n] = mag2 > 0.0 ? std::exp(log_prefactor + 2.0 * log_scale + std::log(mag2)) : 0.0;
    const Complex next = (w * cur - std::sqrt(static_cast<double>(n)) * th * prev) /
                         std::sqrt(static_cast<double>(n + 1));
    prev = cur;
    cur = next;
    const double m = std::max(std::abs(cur), std::abs(prev));
    if (m > 1e100 || (m < 1e-100 && m > 0.0)) {
      const double s = std::log(m);
      cur /= m;
      prev /= m;
      log_scale += s;
    }
  }
  return p;
}

/// Smallest basis size whose closed-form tail beyond it is below \p tail_tol.
inline int tail_dim(Complex alpha, const SqueezeParam& xi, double tail_tol) {
  const auto mom = caves_moments(alpha, xi);
  int bound = static_cast<int>(std::ceil(mom.mean + 40.0 * std::sqrt(mom.variance) + 200.0));
  for (;;) {
    const auto p = dsq_probabilities(alpha, xi, bound);
    double cumulative = 0.0;
    for (int n = 0; n < bound; ++n) {
      cumulative += p[n];
      if (1.0 - cumulative < tail_tol && n >= static_cast<int>(mom.mean)) return n + 1;
    }
    bound *= 2;
  }
}

/// Truncation tail tolerance used by the default sizing rule.
inline constexpr double kSizingTailTol = 1e-12;

/** \brief Basis size for |alpha, xi>.
 *
 *  max(ceil(<n> + 8 sd(n) + 20), tail rule); the Caves term alone is too
 *  small for the geometric tail of strongly squeezed states.
 */
inline int required_dim(Complex alpha, const SqueezeParam& xi,
                        double tail_tol = kSizingTailTol) {
  const auto mom = caves_moments(alpha, xi);
  const int caves =
      static_cast<int>(std::ceil(mom.mean + 8.0 * std::sqrt(mom.variance) + 20.0));
  return std::max(caves, tail_dim(alpha, xi, tail_tol));
}

}  // namespace sqcat
