#pragma once

// Truncated single-oscillator Fock space: states, ladder operators and the
// Husimi quasi-probability map.

#include <cmath>
#include <cstdio>
#include <ostream>
#include <vector>

#include "sqcat/expm.hpp"
#include "sqcat/number_stats.hpp"
#include "sqcat/types.hpp"

namespace sqcat::fock {

/// Number-state amplitudes c_0..c_{dim-1} of one oscillator mode.
class OscillatorState {
 public:
  /// Wraps \p amplitudes; renormalizes unless \p normalize is false.
  explicit OscillatorState(CVector amplitudes, bool normalize = true)
      : amplitudes_(std::move(amplitudes)) {
    if (amplitudes_.size() < 1) throw DimensionError("OscillatorState: dim must be >= 1");
    if (normalize) {
      const double n = amplitudes_.norm();
      if (n == 0.0) throw std::domain_error("OscillatorState: zero vector");
      amplitudes_ /= n;
    }
  }

  int dim() const { return static_cast<int>(amplitudes_.size()); }
  const CVector& amplitudes() const { return amplitudes_; }
  Complex operator[](int n) const { return amplitudes_[n]; }
  double norm() const { return amplitudes_.norm(); }

  /// Population in the top two levels; two because parity states leave one empty.
  double leakage() const {
    const int d = dim();
    double tail = std::norm(amplitudes_[d - 1]);
    if (d > 1) tail += std::norm(amplitudes_[d - 2]);
    return tail;
  }

  /// <a> in this state.
  Complex mean_annihilation() const {
    Complex acc{0.0, 0.0};
    for (int n = 1; n < dim(); ++n) {
      acc += std::conj(amplitudes_[n - 1]) * std::sqrt(static_cast<double>(n)) * amplitudes_[n];
    }
    return acc;
  }

 private:
  CVector amplitudes_;
};

/// Number-state probabilities with per-entry uncertainties.
struct NumberDist {
  std::vector<double> p;
  std::vector<double> sigma;  // same length as p; zero when exact
  int n_max = 0;              // highest represented n
  double tail = 0.0;          // probability above n_max, when known

  static NumberDist exact(std::vector<double> probs, double tail = 0.0) {
    NumberDist d;
    d.n_max = static_cast<int>(probs.size()) - 1;
    d.sigma.assign(probs.size(), 0.0);
    d.p = std::move(probs);
    d.tail = tail;
    return d;
  }

  double total() const {
    double s = 0.0;
    for (double v : p) s += v;
    return s;
  }

  NumberMoments moments() const {
    double s = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t n = 0; n < p.size(); ++n) {
      s += p[n];
      m1 += p[n] * static_cast<double>(n);
      m2 += p[n] * static_cast<double>(n * n);
    }
    const double mean = m1 / s;
    return {mean, m2 / s - mean * mean};
  }
};

/// Lowering operator a on a dim-level space.
inline SparseCMatrix annihilation(int dim) {
  SparseCMatrix a(dim, dim);
  a.reserve(Eigen::VectorXi::Constant(dim, 1));
  for (int n = 1; n < dim; ++n) a.insert(n - 1, n) = std::sqrt(static_cast<double>(n));
  a.makeCompressed();
  return a;
}

inline SparseCMatrix creation(int dim) {
  return SparseCMatrix(annihilation(dim).adjoint());
}

inline OscillatorState number_state(int n, int dim) {
  if (dim < 1) throw DimensionError("number_state: dim must be >= 1");
  if (n < 0 || n >= dim) throw std::domain_error("number_state: n outside [0, dim)");
  CVector c = CVector::Zero(dim);
  c[n] = 1.0;
  return OscillatorState(std::move(c), false);
}

/// Squeeze operator S(xi) = exp((xi^* a^2 - xi a^dag^2)/2) on the truncated space.
inline CMatrix squeeze_operator(const SqueezeParam& xi, int dim) {
  const CMatrix a = CMatrix(annihilation(dim));
  const CMatrix a2 = a * a;
  const CMatrix gen = 0.5 * (std::conj(xi.xi()) * a2 - xi.xi() * a2.adjoint());
  return expm(gen);
}

/// Displacement operator D(alpha) = exp(alpha a^dag - alpha^* a).
inline CMatrix displacement_operator(Complex alpha, int dim) {
  const CMatrix a = CMatrix(annihilation(dim));
  const CMatrix gen = alpha * a.adjoint() - std::conj(alpha) * a;
  return expm(gen);
}

/// Probability mass of |alpha, xi> beyond the first \p dim levels (closed form).
inline double predicted_leakage(Complex alpha, const SqueezeParam& xi, int dim) {
  const auto p = dsq_probabilities(alpha, xi, dim);
  double s = 0.0;
  for (double v : p) s += v;
  return std::max(0.0, 1.0 - s);
}

namespace detail {
inline CVector squeeze_vacuum_column(const SqueezeParam& xi, int dim) {
  if (xi.r == 0.0) {
    CVector c = CVector::Zero(dim);
    c[0] = 1.0;
    return c;
  }
  CVector c = squeeze_operator(xi, dim).col(0);
  for (int n = 1; n < dim; n += 2) {
    if (std::abs(c[n]) < 1e-12) c[n] = 0.0;
  }
  return c;
}
}  // namespace detail

/// S(xi)|0>; only even levels are populated.
inline OscillatorState squeezed_vacuum(const SqueezeParam& xi, int dim) {
  if (dim < 1) throw DimensionError("squeezed_vacuum: dim must be >= 1");
  const double predicted = predicted_leakage(0.0, xi, dim);
  if (predicted > 1e-8) {
    throw TruncationError("squeezed_vacuum: basis too small", predicted, dim);
  }
  return OscillatorState(detail::squeeze_vacuum_column(xi, dim));
}

inline OscillatorState squeezed_vacuum(const SqueezeParam& xi) {
  return squeezed_vacuum(xi, required_dim(0.0, xi));
}

/// D(alpha) S(xi)|0>.
inline OscillatorState displaced_squeezed(Complex alpha, const SqueezeParam& xi, int dim) {
  if (dim < 1) throw DimensionError("displaced_squeezed: dim must be >= 1");
  const double predicted = predicted_leakage(alpha, xi, dim);
  if (predicted > 1e-6) {
    throw TruncationError("displaced_squeezed: basis too small", predicted, dim);
  }
  CVector c = detail::squeeze_vacuum_column(xi, dim);
  if (alpha != Complex{0.0, 0.0}) c = displacement_operator(alpha, dim) * c;
  OscillatorState s(std::move(c));
  if (s.leakage() > 1e-6) {
    throw TruncationError("displaced_squeezed: truncation leakage", s.leakage(), dim);
  }
  return s;
}

inline OscillatorState displaced_squeezed(Complex alpha, const SqueezeParam& xi) {
  return displaced_squeezed(alpha, xi, required_dim(alpha, xi));
}

/// <a|b> = sum_n a_n^* b_n.
inline Complex overlap(const OscillatorState& a, const OscillatorState& b) {
  if (a.dim() != b.dim()) throw DimensionError("overlap: dimension mismatch");
  return a.amplitudes().dot(b.amplitudes());
}

inline NumberDist number_distribution(const OscillatorState& s) {
  std::vector<double> p(static_cast<std::size_t>(s.dim()));
  for (int n = 0; n < s.dim(); ++n) p[n] = std::norm(s[n]);
  return NumberDist::exact(std::move(p));
}

/// Rectangular phase-space sampling in alpha units: beta = x + i p.
struct PhaseGridSpec {
  double x_min = -5.0, x_max = 5.0;
  double p_min = -5.0, p_max = 5.0;
  int nx = 101, np = 101;
};

struct PhaseGrid {
  std::vector<double> x;
  std::vector<double> p;
  RMatrix values;  // values(ix, ip)

  double cell_area() const {
    const double dx = x.size() > 1 ? x[1] - x[0] : 1.0;
    const double dp = p.size() > 1 ? p[1] - p[0] : 1.0;
    return dx * dp;
  }

  /// Riemann-sum integral over the grid.
  double integral() const { return values.sum() * cell_area(); }

  void write_csv(std::ostream& os) const {
    char buf[96];
    os << "x,p,value\n";
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (std::size_t j = 0; j < p.size(); ++j) {
        std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.12e\n", x[i], p[j],
                      values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        os << buf;
      }
    }
  }
};

namespace detail {
inline std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[i] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
  return v;
}
}  // namespace detail

/// Husimi Q(beta) = |<beta|s>|^2 / pi on the grid.
inline PhaseGrid husimi_q(const OscillatorState& s, const PhaseGridSpec& spec) {
  if (spec.nx < 1 || spec.np < 1) throw std::invalid_argument("husimi_q: empty grid");
  PhaseGrid g;
  g.x = detail::linspace(spec.x_min, spec.x_max, spec.nx);
  g.p = detail::linspace(spec.p_min, spec.p_max, spec.np);
  g.values.resize(spec.nx, spec.np);
  const auto& c = s.amplitudes();
  for (int i = 0; i < spec.nx; ++i) {
    for (int j = 0; j < spec.np; ++j) {
      const Complex beta_c{g.x[i], -g.p[j]};
      // <beta|n> = e^{-|beta|^2/2} (beta^*)^n / sqrt(n!)
      Complex coef = std::exp(-0.5 * std::norm(beta_c));
      Complex amp = coef * c[0];
      for (int n = 1; n < s.dim(); ++n) {
        coef *= beta_c / std::sqrt(static_cast<double>(n));
        amp += coef * c[n];
      }
      g.values(i, j) = std::norm(amp) / kPi;
    }
  }
  return g;
}

}  // namespace sqcat::fock
