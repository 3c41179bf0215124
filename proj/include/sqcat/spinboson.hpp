#pragma once

// Spin (x) oscillator dynamics under state-dependent forces.
//
// Composite basis index: spin * dim + n with spin 0 = down, 1 = up.
// Hamiltonians are in rad/s with hbar = 1, in the frame rotating at the
// trap and qubit frequencies.

#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "sqcat/expm.hpp"
#include "sqcat/fock.hpp"
#include "sqcat/sideband.hpp"
#include "sqcat/types.hpp"

namespace sqcat::spinboson {

/// Two spin components, each a vector over number states.
class SpinMotionState {
 public:
  SpinMotionState(const CVector& down, const CVector& up) : data_(down.size() * 2) {
    if (down.size() != up.size() || down.size() < 1) {
      throw DimensionError("SpinMotionState: branch dimensions differ");
    }
    data_ << down, up;
  }

  explicit SpinMotionState(CVector stacked) : data_(std::move(stacked)) {
    if (data_.size() < 2 || data_.size() % 2 != 0) {
      throw DimensionError("SpinMotionState: stacked vector must have even size");
    }
  }

  /// |down> (x) motion.
  static SpinMotionState spin_down(const fock::OscillatorState& motion) {
    return {motion.amplitudes(), CVector::Zero(motion.dim())};
  }

  int dim() const { return static_cast<int>(data_.size() / 2); }
  const CVector& data() const { return data_; }
  auto down() const { return data_.head(dim()); }
  auto up() const { return data_.tail(dim()); }
  double norm() const { return data_.norm(); }

  /// Unnormalized motional component along |+> = (|up> + |down>)/sqrt2.
  CVector plus_component() const { return (up() + down()) / std::sqrt(2.0); }
  CVector minus_component() const { return (up() - down()) / std::sqrt(2.0); }

  /// Population in the top two Fock levels of both spin branches.
  double leakage() const {
    const int d = dim();
    double tail = 0.0;
    for (int s = 0; s < 2; ++s) {
      tail += std::norm(data_[s * d + d - 1]);
      if (d > 1) tail += std::norm(data_[s * d + d - 2]);
    }
    return tail;
  }

 private:
  CVector data_;
};

/// <a> of a motional vector, normalized by its own weight.
inline Complex centroid(const CVector& motion) {
  const double w = motion.squaredNorm();
  if (w == 0.0) return {0.0, 0.0};
  Complex acc{0.0, 0.0};
  for (Eigen::Index n = 1; n < motion.size(); ++n) {
    acc += std::conj(motion[n - 1]) * std::sqrt(static_cast<double>(n)) * motion[n];
  }
  return acc / w;
}

/// State-dependent force pulse. is_return shifts the spin phase by pi.
struct SdfPulse {
  double omega = 0.0;  // rad/s
  double phi_d = 0.0;  // rad
  double tau = 0.0;    // s
  bool is_return = false;

  void validate() const {
    if (!(omega > 0.0)) throw std::domain_error("SdfPulse: omega must be > 0");
    if (!(tau >= 0.0)) throw std::domain_error("SdfPulse: tau must be >= 0");
  }

  SdfPulse returning(double duration) const {
    SdfPulse p = *this;
    p.tau = duration;
    p.is_return = !is_return;
    return p;
  }
};

struct TrapParams {
  double omega_z = two_pi_hz(2.1e6);
  double eta = 0.05;
  double omega_0 = 0.0;  // carrier Rabi frequency for sideband readout, rad/s
  double detuning_offset = 0.0;

  void validate() const {
    if (!(eta > 0.0 && eta < 0.3)) throw std::domain_error("TrapParams: eta outside (0, 0.3)");
    if (!(omega_z > 0.0)) throw std::domain_error("TrapParams: omega_z must be > 0");
  }
};

enum class Model { Lda, Full };

inline Model parse_model(std::string_view tag) {
  if (tag == "lda" || tag == "LDA") return Model::Lda;
  if (tag == "full" || tag == "FULL") return Model::Full;
  throw std::invalid_argument("unknown Hamiltonian model '" + std::string(tag) + "'");
}

inline std::string_view model_name(Model m) { return m == Model::Lda ? "lda" : "full"; }

/// Phase-space displacement of the |+> branch after time t of pulse p.
inline Complex alpha_of_tau(const SdfPulse& p, double t) {
  if (t < 0.0 || t > p.tau * (1.0 + 1e-12)) {
    throw std::domain_error("alpha_of_tau: t outside [0, tau]");
  }
  const Complex a = -kI * (p.omega / 2.0) * std::polar(1.0, -p.phi_d / 2.0) * t;
  return p.is_return ? -a : a;
}

namespace detail {

// (scale) * [sigma_+ (x) m + sigma_- (x) m^dag] with m acting on the motion.
inline SparseCMatrix spin_flip_coupling(const std::vector<Eigen::Triplet<Complex>>& m, int dim,
                                        double scale) {
  std::vector<Eigen::Triplet<Complex>> t;
  t.reserve(2 * m.size());
  for (const auto& e : m) {
    const Complex v = scale * e.value();
    t.emplace_back(dim + e.row(), e.col(), v);              // |up><down| (x) m
    t.emplace_back(e.col(), dim + e.row(), std::conj(v));   // |down><up| (x) m^dag
  }
  SparseCMatrix h(2 * dim, 2 * dim);
  h.setFromTriplets(t.begin(), t.end());
  return h;
}

}  // namespace detail

/** \brief Lamb-Dicke SDF Hamiltonian
 *    H = (Omega/2) sigma_x (x) (a^dag e^{-i phi_D/2} + a e^{i phi_D/2}),
 *  negated for a return pulse.
 */
inline SparseCMatrix h_sdf_lda(const SdfPulse& p, int dim) {
  p.validate();
  const Complex up_phase = std::polar(1.0, -p.phi_d / 2.0);
  std::vector<Eigen::Triplet<Complex>> x;
  for (int n = 0; n + 1 < dim; ++n) {
    const double s = std::sqrt(static_cast<double>(n + 1));
    x.emplace_back(n + 1, n, s * up_phase);
    x.emplace_back(n, n + 1, s * std::conj(up_phase));
  }
  const double sign = p.is_return ? -1.0 : 1.0;
  return detail::spin_flip_coupling(x, dim, sign * p.omega / 2.0);
}

/** \brief Resonant-term SDF Hamiltonian without the Lamb-Dicke expansion.
 *
 *  H = (Omega0/2) [sigma_+ (x) (M_bsb e^{-i phi_b} + M_rsb e^{-i phi_r}) + h.c.]
 *  with <n+1|M_bsb|n> = <n|M_rsb|n+1> = i e^{-eta^2/2} eta L^1_n(eta^2)/sqrt(n+1),
 *  phi_b = pi/2 + phi_D/2 and phi_r = pi/2 - phi_D/2 (both shifted by pi for a
 *  return pulse). Omega0 = pulse.omega / eta, so eta -> 0 recovers h_sdf_lda.
 */
inline SparseCMatrix h_sdf_full(const TrapParams& tp, const SdfPulse& p, int dim) {
  tp.validate();
  p.validate();
  const double spin_shift = p.is_return ? kPi : 0.0;
  const Complex bsb_phase = std::polar(1.0, -(kPi / 2.0 + p.phi_d / 2.0 + spin_shift));
  const Complex rsb_phase = std::polar(1.0, -(kPi / 2.0 - p.phi_d / 2.0 + spin_shift));
  std::vector<Eigen::Triplet<Complex>> m;
  for (int n = 0; n + 1 < dim; ++n) {
    const Complex element = kI * sideband_coupling(n, tp.eta);
    m.emplace_back(n + 1, n, element * bsb_phase);
    m.emplace_back(n, n + 1, element * rsb_phase);
  }
  const double omega0 = p.omega / tp.eta;
  return detail::spin_flip_coupling(m, dim, omega0 / 2.0);
}

/// sigma_z * delta / 2 on the composite space.
inline SparseCMatrix detuning_term(double delta, int dim) {
  SparseCMatrix h(2 * dim, 2 * dim);
  h.reserve(Eigen::VectorXi::Constant(2 * dim, 1));
  for (int n = 0; n < dim; ++n) {
    h.insert(n, n) = -delta / 2.0;
    h.insert(dim + n, dim + n) = delta / 2.0;
  }
  h.makeCompressed();
  return h;
}

inline SparseCMatrix pulse_hamiltonian(const SdfPulse& p, const TrapParams& tp, Model model,
                                       int dim, double detuning) {
  SparseCMatrix h = model == Model::Lda ? h_sdf_lda(p, dim) : h_sdf_full(tp, p, dim);
  if (detuning != 0.0) h += detuning_term(detuning, dim);
  return h;
}

/// exp(-iHt) s via the dense exponential.
inline SpinMotionState evolve(const SpinMotionState& s, const SparseCMatrix& h, double t) {
  if (h.rows() != s.data().size() || h.cols() != h.rows()) {
    throw DimensionError("evolve: Hamiltonian and state dimensions differ");
  }
  if (t == 0.0) return s;
  const CMatrix gen = CMatrix(h) * Complex{0.0, -t};
  return SpinMotionState(CVector(expm(gen) * s.data()));
}

/// (|+>|alpha,xi> - |->|-alpha,xi>)/sqrt2 in the (down, up) basis.
inline SpinMotionState swes_analytic(Complex alpha, const SqueezeParam& xi, int dim) {
  const auto plus = fock::displaced_squeezed(alpha, xi, dim);
  const auto minus = fock::displaced_squeezed(-alpha, xi, dim);
  const CVector& a = plus.amplitudes();
  const CVector& b = minus.amplitudes();
  return {CVector((a + b) / 2.0), CVector((a - b) / 2.0)};
}

inline SpinMotionState swes_analytic(Complex alpha, const SqueezeParam& xi) {
  return swes_analytic(alpha, xi, required_dim(alpha, xi));
}

inline double spin_down_prob(const SpinMotionState& s) { return s.down().squaredNorm(); }

inline double fidelity(const SpinMotionState& a, const SpinMotionState& b) {
  if (a.dim() != b.dim()) throw DimensionError("fidelity: dimension mismatch");
  return std::norm(a.data().dot(b.data()));
}

struct SequenceOptions {
  double sample_dt = 1e-6;  // s
  double detuning = 0.0;    // rad/s, sigma_z delta/2
};

struct SequenceSample {
  double t = 0.0;
  SpinMotionState state;
};

/// Visits (t, state) at every sample time of a contiguous pulse sequence.
inline void propagate_sequence(
    const SpinMotionState& initial, const std::vector<SdfPulse>& pulses, const TrapParams& tp,
    Model model, const SequenceOptions& opt,
    const std::function<void(double, const CVector&)>& visit) {
  if (!(opt.sample_dt > 0.0)) throw std::domain_error("propagate_sequence: sample_dt must be > 0");
  const int dim = initial.dim();
  CVector psi = initial.data();
  double t = 0.0;
  visit(t, psi);
  for (const auto& p : pulses) {
    const SparseCMatrix gen = pulse_hamiltonian(p, tp, model, dim, opt.detuning) * Complex{0.0, -1.0};
    const double ratio = p.tau / opt.sample_dt;
    const auto steps = static_cast<long>(std::floor(ratio + 1e-9));
    const double rest = p.tau - steps * opt.sample_dt;
    const double t0 = t;
    for (long k = 1; k <= steps; ++k) {
      psi = expm_action(gen, opt.sample_dt, std::move(psi));
      t = t0 + k * opt.sample_dt;
      visit(t, psi);
    }
    if (rest > 1e-9 * opt.sample_dt) {
      psi = expm_action(gen, rest, std::move(psi));
      t = t0 + p.tau;
      visit(t, psi);
    }
    t = t0 + p.tau;
  }
}

/// Ordered states at the sample times of a contiguous pulse sequence.
inline std::vector<SequenceSample> run_sequence(const SpinMotionState& initial,
                                                const std::vector<SdfPulse>& pulses,
                                                const TrapParams& tp, Model model,
                                                const SequenceOptions& opt = {}) {
  std::vector<SequenceSample> out;
  propagate_sequence(initial, pulses, tp, model, opt, [&](double t, const CVector& psi) {
    out.push_back({t, SpinMotionState(psi)});
  });
  return out;
}

/// One CSV row of a time series.
struct SeriesRow {
  double t = 0.0;
  double p_down = 0.0;
  Complex alpha_plus{0.0, 0.0};
  double leakage = 0.0;
};

inline SeriesRow summarize(double t, const SpinMotionState& s) {
  return {t, spin_down_prob(s), centroid(s.plus_component()), s.leakage()};
}

inline void write_series_csv(std::ostream& os, const std::vector<SeriesRow>& rows) {
  char buf[160];
  os << "t_us,P_down,Re_alpha_plus,Im_alpha_plus,leakage\n";
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6f,%.12f,%.10f,%.10f,%.6e\n", r.t * 1e6, r.p_down,
                  r.alpha_plus.real(), r.alpha_plus.imag(), r.leakage);
    os << buf;
  }
}

}  // namespace sqcat::spinboson
