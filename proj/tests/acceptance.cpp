// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "sqcat/estimate.hpp"
#include "sqcat/noise.hpp"
#include "sqcat/signals.hpp"

namespace {

using namespace sqcat;
using spinboson::centroid;
using spinboson::Model;
using spinboson::SdfPulse;
using spinboson::SpinMotionState;

const double kOmega = two_pi_hz(13.25e3);
const double kR = 1.08;

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const char* fmt, ...) __attribute__((format(printf, 3, 4))) {
    char buf[512];
    va_list ap;
    va_start(ap, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, ap);
    va_end(ap);
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += buf;
    if (!ok) detail += " [miss]";
  }
  void note(const char* fmt, ...) __attribute__((format(printf, 2, 3))) {
    char buf[512];
    va_list ap;
    va_start(ap, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, ap);
    va_end(ap);
    if (!detail.empty()) detail += "; ";
    detail += buf;
  }
};

/// First time P(down) - 1/2 falls to half its start, by linear interpolation.
double half_decay(const std::vector<spinboson::SequenceSample>& series) {
  double prev_t = 0.0, prev_p = 1.0;
  for (const auto& s : series) {
    const double p = spinboson::spin_down_prob(s.state);
    if (p <= 0.75) return prev_t + (s.t - prev_t) * (prev_p - 0.75) / (prev_p - p);
    prev_t = s.t;
    prev_p = p;
  }
  return NAN;
}

std::vector<spinboson::SequenceSample> single_force(const SqueezeParam& xi, double phi_d, double t_max,
                                                    double dt) {
  const SdfPulse p{kOmega, phi_d, t_max, false};
  const int dim = required_dim(spinboson::alpha_of_tau(p, t_max), xi) + 20;
  spinboson::SequenceOptions opt;
  opt.sample_dt = dt;
  return spinboson::run_sequence(SpinMotionState::spin_down(fock::squeezed_vacuum(xi, dim)), {p}, {},
                                 Model::Lda, opt);
}

Verdict squeezing_calibration() {
  Verdict v;
  const double db = SqueezeParam{kR, 0.0}.reduction_db();
  v.require(std::abs(db - 9.4) <= 0.05, "r=1.08 -> %.4f dB vs 9.4 +- 0.05", db);
  return v;
}

Verdict overlap_oracle() {
  Verdict v;
  double worst = 0.0;
  for (double r : {0.0, 0.5, kR})
    for (double a : {0.0, 0.5, 1.0, 2.0, 3.0})
      for (double dphi : {0.0, kPi / 4, kPi / 2}) {
        const auto p = signals::OverlapParams::from_delta_phi(a, r, dphi);
        const int dim = required_dim(p.alpha(), p.xi());
        const auto plus = fock::displaced_squeezed(p.alpha(), p.xi(), dim);
        const auto minus = fock::displaced_squeezed(-p.alpha(), p.xi(), dim);
        worst = std::max(worst, std::abs(signals::overlap_x(p) - fock::overlap(minus, plus)));
      }
  v.require(worst < 1e-8, "max |closed form - numeric| = %.2e over 45 points (< 1e-8)", worst);
  return v;
}

Verdict overlap_scan_shape() {
  Verdict v;
  const double ground = half_decay(single_force({0.0, 0.0}, 0.0, 25e-6, 0.02e-6));
  const double along = half_decay(single_force({kR, 0.0}, -kPi, 8e-6, 0.01e-6));
  const double across = half_decay(single_force({kR, 0.0}, 0.0, 60e-6, 0.05e-6));
  const double er = std::exp(kR);
  v.require(std::abs(ground / along / er - 1.0) <= 0.05, "ground/dphi0 = %.4f (e^r = %.4f)", ground / along,
            er);
  v.require(std::abs(across / ground / er - 1.0) <= 0.05, "dphi(pi/2)/ground = %.4f", across / ground);
  v.note("half-decay %.2f / %.2f / %.2f us", ground * 1e6, along * 1e6, across * 1e6);
  return v;
}

Verdict revival() {
  Verdict v;
  const SqueezeParam xi{kR, 0.0};
  for (double tau : {60e-6, 120e-6, 250e-6}) {
    const SdfPulse p{kOmega, 0.0, tau, false};
    const int dim = required_dim(spinboson::alpha_of_tau(p, tau), xi) + 20;
    spinboson::SequenceOptions opt;
    opt.sample_dt = 5e-6;
    double p_end = 0.0, sep = 0.0;
    spinboson::propagate_sequence(SpinMotionState::spin_down(fock::squeezed_vacuum(xi, dim)),
                                  {p, p.returning(tau)}, {}, Model::Lda, opt,
                                  [&](double t, const CVector& psi) {
                                    const SpinMotionState s(psi);
                                    if (std::abs(t - tau) < 1e-12)
                                      sep = std::abs(centroid(s.plus_component()) - centroid(s.minus_component()));
                                    p_end = spinboson::spin_down_prob(s);
                                  });
    v.require(std::abs(p_end - 1.0) <= 1e-6, "tau=%.0f us P=1-%.1e (dim %d)", tau * 1e6, 1.0 - p_end, dim);
    if (tau == 250e-6) v.require(std::abs(sep - 20.8) < 0.05, "|dalpha|(250 us) = %.3f vs 20.8", sep);
  }
  return v;
}

double branch_deficit(double tau, double phi_d) {
  const SqueezeParam xi{kR, 0.0};
  const SdfPulse p{kOmega, phi_d, tau, false};
  const int dim = required_dim(spinboson::alpha_of_tau(p, tau), xi) + 40;
  const auto s0 = SpinMotionState::spin_down(fock::squeezed_vacuum(xi, dim));
  spinboson::SequenceOptions opt;
  opt.sample_dt = tau;
  const auto lda = spinboson::run_sequence(s0, {p}, {}, Model::Lda, opt).back().state;
  const auto full = spinboson::run_sequence(s0, {p}, {}, Model::Full, opt).back().state;
  return 1.0 - std::abs(centroid(full.plus_component())) / std::abs(centroid(lda.plus_component()));
}

Verdict non_lda_deficit() {
  Verdict v;
  const double long_d = branch_deficit(250e-6, 0.0);
  const double short_d = branch_deficit(60e-6, 0.0);
  v.require(std::abs(long_d - 0.04) <= 0.01, "anti-axis force: 250 us deficit %.2f%%", 100 * long_d);
  v.require(short_d < 0.01, "60 us deficit %.2f%%", 100 * short_d);
  v.note("squeezed-axis force (info): %.2f%% / %.2f%%", 100 * branch_deficit(250e-6, -kPi),
         100 * branch_deficit(60e-6, -kPi));
  return v;
}

Verdict number_statistics() {
  Verdict v;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Complex alpha = std::polar(4.0 * u(rng), 2 * kPi * u(rng));
    const SqueezeParam xi{1.3 * u(rng), 2 * kPi * u(rng)};
    const auto m = signals::dsq_number_dist(alpha, xi, 1.0, 600).moments();
    const auto c = caves_moments(alpha, xi);
    worst = std::max({worst, std::abs(m.mean / c.mean - 1.0), std::abs(m.variance / c.variance - 1.0)});
  }
  v.require(worst < 1e-6, "max relative moment error %.2e", worst);
  auto q = [](double a, double phi_s) {
    const auto m = signals::dsq_moments(a, {kR, phi_s});
    return signals::mandel_q(m.mean, m.variance);
  };
  double lo = 0.5, hi = 6.0;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    (q(mid, 0.0) > 0 ? lo : hi) = mid;
  }
  v.require(std::abs(lo - 2.90) <= 0.02, "squeezed-axis Q crosses 0 at |alpha|=%.4f", lo);
  bool shapes = true;
  for (double a = 0.25; a <= 30.0; a += 0.25) shapes = shapes && q(a, 0.0) < q(a - 0.25, 0.0) && q(a, kPi) > q(a - 0.25, kPi);
  v.require(shapes, "Q falls along squeezed axis, rises along anti axis");
  return v;
}

Verdict bsb_round_trip() {
  Verdict v;
  signals::BsbModelParams m;
  m.omega_0 = two_pi_hz(10e3) / m.eta;
  m.gamma = 500.0;
  std::vector<double> t;
  for (int i = 0; i <= 600; ++i) t.push_back(i * 1e-6);
  struct Axis {
    const char* name;
    estimate::Geometry g;
  };
  std::mt19937_64 rng(7);
  for (const Axis a : {Axis{"squeezed", estimate::Geometry::SqueezedAxis},
                       Axis{"anti", estimate::Geometry::AntiSqueezedAxis}}) {
    const SqueezeParam xi{kR, estimate::geometry_phi_s(a.g)};
    const auto truth = signals::dsq_number_dist(2.4, xi, 1.0, 200);
    auto trace = make_trace(ScanKind::Duration, t, signals::bsb_trace(t, truth, m), 300);
    trace = with_projection_noise(trace, rng);
    const auto fit = estimate::fit_bsb_trace(trace);
    double tv = 0.0;
    for (std::size_t n = 0; n < truth.p.size(); ++n) tv += std::abs((n < fit.p.p.size() ? fit.p.p[n] : 0.0) - truth.p[n]);
    tv *= 0.5;
    const auto dsq = estimate::fit_dsq_pn(fit.p, a.g);
    const double r = dsq.value("r"), abs_a = dsq.value("abs_alpha");
    v.require(tv < 0.08, "%s TV %.3f", a.name, tv);
    v.require(std::abs(r / kR - 1.0) <= 0.05 && std::abs(abs_a / 2.4 - 1.0) <= 0.05, "%s r=%.3f |alpha|=%.3f",
              a.name, r, abs_a);
  }
  return v;
}

Verdict collapse() {
  Verdict v;
  signals::BsbModelParams m;
  m.omega_0 = two_pi_hz(10e3) / m.eta;
  std::vector<double> t;
  for (int i = 0; i <= 60000; ++i) t.push_back(i * 1e-8);
  const SqueezeParam xi{kR, 0.0};
  const auto dsq = signals::dsq_number_dist(2.4, xi, 1.0, 29);
  const double mean = signals::dsq_moments(2.4, xi).mean;
  std::vector<double> poisson(30);
  double log_fact = 0.0;
  for (int n = 0; n < 30; ++n) {
    if (n > 0) log_fact += std::log(n);
    poisson[n] = std::exp(-mean + n * std::log(mean) - log_fact);
  }
  const auto pois = fock::NumberDist::exact(poisson);
  const int n_sq = signals::oscillations_before_collapse(signals::bsb_trace(t, dsq, m), 0.5 * dsq.total());
  const int n_pois = signals::oscillations_before_collapse(signals::bsb_trace(t, pois, m), 0.5 * pois.total());
  v.require(n_sq > n_pois, "<n>=%.2f extrema before collapse: squeezed %d, Poisson %d", mean, n_sq, n_pois);
  return v;
}

Verdict noise_suite() {
  Verdict v;
  noise::NoiseModel m;
  m.shots = 100;
  const auto t2 = noise::ramsey_t2(m);
  v.require(t2 && std::abs(*t2 - 186e-6) <= 10e-6, "T2 = %.2f us", t2 ? *t2 * 1e6 : NAN);
  const SqueezeParam xi{kR, 0.0};
  for (double tau : {60e-6, 120e-6}) {
    auto peak = [&](const SqueezeParam& s, double phi_d) {
      const auto sc = noise::revival_scenario(s, kOmega, phi_d, tau, m.heating_rate, Model::Lda, 2e-6);
      return noise::ensemble_average(sc, m, 0);
    };
    const auto g = peak({0.0, 0.0}, 0.0);
    const auto sq = peak(xi, -kPi);
    const auto anti = peak(xi, 0.0);
    const double pg = noise::revival_peak(g.trace, tau);
    const double ps = noise::revival_peak(sq.trace, tau);
    const double pa = noise::revival_peak(anti.trace, tau);
    v.require(pg >= ps, "tau=%.0f us ground %.3f >= squeezed %.3f", tau * 1e6, pg, ps);
    v.require(ps >= pa, "squeezed %.3f >= anti %.3f", ps, pa);
    if (tau == 120e-6) {
      double worst = 0.0;
      int n = 0;
      for (const auto& s : anti.trace.samples) {
        if (s.x <= tau) continue;
        const double a = kOmega * (2.0 * tau - s.x) / 2.0;
        if (std::exp(-2.0 * a * a * std::exp(-2.0 * kR)) > 0.05) continue;
        worst = std::max(worst, std::abs(s.p_down - 0.5));
        ++n;
      }
      v.require(n > 10 && worst < 0.05, "anti-axis |P-0.5| <= %.3f over %d separated samples", worst, n);
    }
  }
  return v;
}

Verdict contrast_identity() {
  Verdict v;
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const double r = 1.5 * u(rng);
    const double phi_s = 2 * kPi * u(rng);
    const Complex alpha = std::polar(0.5 + 5 * u(rng), phi_s / 2);
    const auto c = signals::interferometer_contrast(alpha, 0.4 * (u(rng) - 0.5), {r, phi_s});
    const double ar2 = std::norm(c.alpha_r);
    const double methods = std::exp(-2 * ar2 * (std::exp(-2 * r) - 1));
    const double dalpha2 = 4 * ar2;
    const double main_text = std::exp(-dalpha2 * (std::exp(-2 * r) - 1) / 2);
    worst = std::max({worst, std::abs(methods / main_text - 1.0), std::abs(c.improvement / methods - 1.0)});
  }
  v.require(worst <= 1e-12, "max relative difference %.1e over 10 draws", worst);
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"squeezing calibration", squeezing_calibration},
      {"overlap oracle", overlap_oracle},
      {"overlap scan half-decay", overlap_scan_shape},
      {"noiseless revival", revival},
      {"non-LDA deficit", non_lda_deficit},
      {"number statistics", number_statistics},
      {"BSB inversion round trip", bsb_round_trip},
      {"collapse before revival", collapse},
      {"noise suite", noise_suite},
      {"contrast identity", contrast_identity},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("threw: ") + e.what();
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %2zu %s (%.1f s): %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, s,
                v.detail.c_str());
    std::fflush(stdout);
    failed += v.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria pass\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
