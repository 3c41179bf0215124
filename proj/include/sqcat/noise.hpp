#pragma once

// Quasi-static magnetic-field detuning and motional heating: Monte-Carlo
// wavefunction trajectories of SDF sequences, ensemble traces and Ramsey T2.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <future>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include "sqcat/spinboson.hpp"
#include "sqcat/trace.hpp"

namespace sqcat::noise {

using spinboson::Model;
using spinboson::SdfPulse;
using spinboson::SpinMotionState;
using spinboson::TrapParams;

/// Detuning per unit field amplitude implied by 1.5 kHz at 2.2 mG.
inline constexpr double kDefaultKhzPerMilligauss = 1.5 / 2.2;

/// Line-frequency field amplitude (mG) to detuning amplitude (rad/s).
inline double detuning_from_field(double amplitude_mg, double khz_per_mg = kDefaultKhzPerMilligauss) {
  return two_pi_hz(amplitude_mg * khz_per_mg * 1e3);
}

struct NoiseModel {
  double detuning_amplitude = two_pi_hz(1.5e3);  // delta_max, rad/s
  double line_freq = 50.0;                       // Hz; sets the quasi-static timescale only
  double heating_rate = 10.0;                    // quanta/s
  int shots = 100;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(detuning_amplitude >= 0.0)) throw std::domain_error("NoiseModel: detuning amplitude must be >= 0");
    if (!(heating_rate >= 0.0)) throw std::domain_error("NoiseModel: heating rate must be >= 0");
    if (!(line_freq > 0.0)) throw std::domain_error("NoiseModel: line frequency must be > 0");
    if (shots < 1) throw std::domain_error("NoiseModel: shots must be >= 1");
  }
};

/// Pulses and idle periods (omega = 0) played back to back.
struct Scenario {
  SpinMotionState initial;
  std::vector<SdfPulse> segments;
  TrapParams trap;
  Model model = Model::Lda;
  double sample_dt = 1e-6;  // s

  double duration() const {
    double t = 0.0;
    for (const auto& s : segments) t += s.tau;
    return t;
  }

  void validate() const {
    trap.validate();
    if (!(sample_dt > 0.0)) throw std::domain_error("Scenario: sample_dt must be > 0");
    for (const auto& s : segments) {
      if (!(s.omega >= 0.0)) throw std::domain_error("Scenario: segment omega must be >= 0");
      if (!(s.tau >= 0.0)) throw std::domain_error("Scenario: segment tau must be >= 0");
    }
  }
};

/** \brief Fock cutoff for a noisy sequence.
 *
 *  A detuning can hold a branch on one side for the whole sequence, so the
 *  reach is Omega * (sum of durations) / 2 along either principal axis, plus
 *  headroom for heating jumps.
 */
inline int sequence_dim(const std::vector<SdfPulse>& segments, const SqueezeParam& xi,
                        double heating_rate = 0.0) {
  double reach = 0.0, total = 0.0;
  for (const auto& s : segments) {
    reach += s.omega * s.tau / 2.0;
    total += s.tau;
  }
  const Complex along = std::polar(reach, xi.phi_s / 2.0);
  const int base = std::max(required_dim(along, xi), required_dim(along * kI, xi));
  return base + static_cast<int>(std::ceil(10.0 * heating_rate * total)) + 4;
}

/// Force then return, both of duration \p tau, on |down> (x) S(xi)|0>.
inline Scenario revival_scenario(const SqueezeParam& xi, double omega, double phi_d, double tau,
                                 double heating_rate = 0.0, Model model = Model::Lda,
                                 double sample_dt = 1e-6) {
  const SdfPulse force{omega, phi_d, tau, false};
  std::vector<SdfPulse> segments{force, force.returning(tau)};
  const int dim = sequence_dim(segments, xi, heating_rate);
  Scenario sc{SpinMotionState::spin_down(fock::squeezed_vacuum(xi, dim)), std::move(segments), {},
              model, sample_dt};
  return sc;
}

/// delta = delta_max sin(u), u uniform on [0, 2 pi).
template <class Rng>
double sample_detuning(const NoiseModel& m, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
  return m.detuning_amplitude * std::sin(u(rng));
}

/// Independent stream for one shot.
inline std::mt19937_64 shot_rng(std::uint64_t seed, std::uint64_t shot) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(shot), static_cast<std::uint32_t>(shot >> 32)};
  return std::mt19937_64(seq);
}

struct TrajectoryPoint {
  double t = 0.0;
  double p_down = 0.0;
  double mean_n = 0.0;
  double norm = 1.0;  // norm of the stored state
};

struct Trajectory {
  double detuning = 0.0;
  int jumps = 0;
  std::vector<double> jump_norms;  // norm right after each renormalized jump
  std::vector<TrajectoryPoint> points;
};

namespace detail {

inline TrajectoryPoint observe(double t, const CVector& psi, int dim) {
  const double total = psi.squaredNorm();
  double down = psi.head(dim).squaredNorm();
  double n = 0.0;
  for (int k = 0; k < dim; ++k) n += k * (std::norm(psi[k]) + std::norm(psi[dim + k]));
  return {t, down / total, n / total, std::sqrt(total)};
}

/// -(rate/2)(2n + 1) on both spin branches.
inline SparseCMatrix heating_damping(double rate, int dim) {
  SparseCMatrix d(2 * dim, 2 * dim);
  d.reserve(Eigen::VectorXi::Constant(2 * dim, 1));
  for (int s = 0; s < 2; ++s) {
    for (int n = 0; n < dim; ++n) d.insert(s * dim + n, s * dim + n) = -0.5 * rate * (2.0 * n + 1.0);
  }
  d.makeCompressed();
  return d;
}

/// Raise (up = true) or lower the motion in both spin branches.
inline CVector ladder(const CVector& psi, int dim, bool up) {
  CVector out = CVector::Zero(psi.size());
  for (int s = 0; s < 2; ++s) {
    const int o = s * dim;
    if (up) {
      for (int n = 0; n + 1 < dim; ++n) out[o + n + 1] = std::sqrt(n + 1.0) * psi[o + n];
    } else {
      for (int n = 1; n < dim; ++n) out[o + n - 1] = std::sqrt(static_cast<double>(n)) * psi[o + n];
    }
  }
  return out;
}

}  // namespace detail

/** \brief One Monte-Carlo wavefunction trajectory at fixed detuning \p delta.
 *
 *  Jump operators sqrt(rate) a^dag and sqrt(rate) a; jumps by the norm-threshold
 *  method with substeps that keep the jump probability per step below 1e-3.
 *  With zero heating and no idle segments this is exactly the unitary
 *  sequence propagation.
 *  Throws TruncationError if a raising jump pushes weight onto the top level.
 */
template <class Rng>
Trajectory mcwf_shot(const Scenario& sc, double delta, const NoiseModel& m, Rng& rng) {
  sc.validate();
  m.validate();
  const int dim = sc.initial.dim();
  Trajectory traj;
  traj.detuning = delta;

  spinboson::SequenceOptions opt;
  opt.sample_dt = sc.sample_dt;
  opt.detuning = delta;
  const bool has_idle =
      std::any_of(sc.segments.begin(), sc.segments.end(), [](const SdfPulse& s) { return s.omega == 0.0; });
  if (m.heating_rate == 0.0 && !has_idle) {
    spinboson::propagate_sequence(sc.initial, sc.segments, sc.trap, sc.model, opt,
                                  [&](double t, const CVector& psi) {
                                    traj.points.push_back(detail::observe(t, psi, dim));
                                  });
    return traj;
  }

  const SparseCMatrix damping = detail::heating_damping(m.heating_rate, dim);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  CVector psi = sc.initial.data() / sc.initial.norm();
  double threshold = unit(rng);
  double t = 0.0;
  traj.points.push_back(detail::observe(t, psi, dim));

  auto advance = [&](const SparseCMatrix& gen, double span) {
    double done = 0.0;
    while (span - done > 1e-12 * span) {
      const auto obs = detail::observe(0.0, psi, dim);
      const double rate = m.heating_rate * (2.0 * obs.mean_n + 1.0);
      const double dt = rate > 0.0 ? std::min(span - done, 1e-3 / rate) : span - done;
      psi = expm_action(gen, dt, std::move(psi));
      done += dt;
      if (m.heating_rate == 0.0 || psi.squaredNorm() > threshold) continue;
      const CVector raised = detail::ladder(psi, dim, true);
      const CVector lowered = detail::ladder(psi, dim, false);
      const double w_up = raised.squaredNorm();
      const double w_down = lowered.squaredNorm();
      const bool up = unit(rng) * (w_up + w_down) < w_up;
      psi = up ? raised : lowered;
      psi /= psi.norm();
      traj.jump_norms.push_back(psi.norm());
      ++traj.jumps;
      threshold = unit(rng);
      if (up) {
        const double top = std::norm(psi[dim - 1]) + std::norm(psi[2 * dim - 1]);
        if (top > 1e-6) {
          throw TruncationError("mcwf_shot: heating jump reached the top Fock level", top, dim);
        }
      }
    }
  };

  for (const auto& seg : sc.segments) {
    const SparseCMatrix h = seg.omega == 0.0 ? spinboson::detuning_term(delta, dim)
                                             : spinboson::pulse_hamiltonian(seg, sc.trap, sc.model, dim, delta);
    const SparseCMatrix gen = h * Complex{0.0, -1.0} + damping;
    const auto steps = static_cast<long>(std::floor(seg.tau / sc.sample_dt + 1e-9));
    const double rest = seg.tau - steps * sc.sample_dt;
    const double t0 = t;
    for (long k = 1; k <= steps; ++k) {
      advance(gen, sc.sample_dt);
      t = t0 + k * sc.sample_dt;
      traj.points.push_back(detail::observe(t, psi, dim));
    }
    if (rest > 1e-9 * sc.sample_dt) {
      advance(gen, rest);
      traj.points.push_back(detail::observe(t0 + seg.tau, psi, dim));
    }
    t = t0 + seg.tau;
  }
  return traj;
}

struct EnsembleResult {
  PopulationTrace trace;  // p_down mean per time, sem attached, reps = shots
  std::vector<double> mean_n;
  std::vector<double> detunings;  // per shot
  int total_jumps = 0;
};

/** \brief Shot-averaged P(down)(t) with a fresh detuning and jump record per shot.
 *
 *  Shot k draws from shot_rng(seed, k), so the result does not depend on
 *  \p threads or scheduling.
 */
inline EnsembleResult ensemble_average(const Scenario& sc, const NoiseModel& m, unsigned threads = 0) {
  sc.validate();
  m.validate();
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(m.shots));

  std::vector<Trajectory> shots(static_cast<std::size_t>(m.shots));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int k = next++; k < m.shots; k = next++) {
      auto rng = shot_rng(m.seed, static_cast<std::uint64_t>(k));
      const double delta = sample_detuning(m, rng);
      shots[static_cast<std::size_t>(k)] = mcwf_shot(sc, delta, m, rng);
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::future<void>> jobs;
    for (unsigned w = 0; w < threads; ++w) jobs.push_back(std::async(std::launch::async, worker));
    for (auto& j : jobs) j.get();
  }

  EnsembleResult out;
  out.trace.kind = ScanKind::Duration;
  const std::size_t samples = shots.front().points.size();
  const double n_shots = static_cast<double>(m.shots);
  for (std::size_t i = 0; i < samples; ++i) {
    // Shifted sums: exact when every shot agrees.
    const double ref = shots.front().points[i].p_down;
    const double ref_n = shots.front().points[i].mean_n;
    double s1 = 0.0, s2 = 0.0, sn = 0.0;
    for (const auto& s : shots) {
      const double d = s.points[i].p_down - ref;
      s1 += d;
      s2 += d * d;
      sn += s.points[i].mean_n - ref_n;
    }
    TraceSample row;
    row.x = shots.front().points[i].t;
    row.p_down = ref + s1 / n_shots;
    row.reps = m.shots;
    if (m.shots > 1) {
      const double var = std::max(0.0, (s2 - s1 * s1 / n_shots) / (n_shots - 1.0));
      row.sem = std::sqrt(var / n_shots);
    }
    out.trace.samples.push_back(row);
    out.mean_n.push_back(ref_n + sn / n_shots);
  }
  for (const auto& s : shots) {
    out.detunings.push_back(s.detuning);
    out.total_jumps += s.jumps;
  }
  return out;
}

/// Ramsey contrast <cos(delta t)> over the arcsine law, by periodic quadrature in u.
inline double ramsey_contrast(double delta_max, double t, int nodes = 512) {
  double acc = 0.0;
  for (int k = 0; k < nodes; ++k) {
    const double u = 2.0 * kPi * (k + 0.5) / nodes;
    acc += std::cos(delta_max * std::sin(u) * t);
  }
  return acc / nodes;
}

/** \brief First time the Ramsey contrast falls to 1/e.
 *
 *  std::nullopt when it stays above 1/e up to \p horizon (seconds), which
 *  includes delta_max = 0.
 */
inline std::optional<double> ramsey_t2(const NoiseModel& m, double horizon = 1.0) {
  m.validate();
  const double target = std::exp(-1.0);
  const double dm = m.detuning_amplitude;
  if (dm == 0.0) return std::nullopt;
  // Contrast is monotone up to its first zero; step in units of 1/delta_max.
  const double step = 0.05 / dm;
  double lo = 0.0;
  for (double t = step; t <= horizon; t += step) {
    if (ramsey_contrast(dm, t) <= target) {
      double a = lo, b = t;
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (a + b);
        (ramsey_contrast(dm, mid) > target ? a : b) = mid;
      }
      return 0.5 * (a + b);
    }
    lo = t;
  }
  return std::nullopt;
}

/// Largest P(down) at or after \p t_from.
inline double revival_peak(const PopulationTrace& trace, double t_from) {
  double best = 0.0;
  for (const auto& s : trace.samples)
    if (s.x >= t_from - 1e-12) best = std::max(best, s.p_down);
  return best;
}

}  // namespace sqcat::noise
