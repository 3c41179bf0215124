#pragma once

// Config-driven scenario runners. prepare() reads and validates everything
// and returns a job; the job computes in-memory artifacts, so nothing is
// written unless the whole run succeeds.

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "sqcat/config.hpp"
#include "sqcat/estimate.hpp"
#include "sqcat/fock.hpp"
#include "sqcat/noise.hpp"
#include "sqcat/signals.hpp"
#include "sqcat/spinboson.hpp"
#include "sqcat/trace.hpp"

namespace sqcat::cli {

using Json = nlohmann::json;
using config::Config;
using spinboson::SdfPulse;
using spinboson::SpinMotionState;
using spinboson::TrapParams;

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> names = {"overlap-scan", "phase-scan", "revival", "bsb",
                                                 "qfunc",        "noise-sim",  "fit"};
  return names;
}

struct RunContext {
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

/// File name -> content, in name order.
using Artifacts = std::map<std::string, std::string>;
using Job = std::function<Artifacts()>;

namespace detail {

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

inline std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::vector<double> grid(double lo, double hi, double step) {
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  for (long k = 0; k <= n; ++k) out.push_back(lo + step * static_cast<double>(k));
  return out;
}

inline std::mt19937_64 stream(const RunContext& ctx, std::uint64_t index) {
  return noise::shot_rng(ctx.seed, index);
}

inline double positive(const Config& c, const std::string& s, const std::string& k,
                       std::optional<double> fallback) {
  const double v = c.real(s, k, fallback);
  c.check(v > 0.0, s, k, "must be > 0");
  return v;
}

inline double non_negative(const Config& c, const std::string& s, const std::string& k,
                       std::optional<double> fallback) {
  const double v = c.real(s, k, fallback);
  c.check(v >= 0.0, s, k, "must be >= 0");
  return v;
}

inline int count(const Config& c, const std::string& s, const std::string& k, long long fallback, long long lo,
                 long long hi) {
  const long long v = c.integer(s, k, fallback);
  c.check(v >= lo && v <= hi, s, k, "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<int>(v);
}

inline TrapParams read_trap(const Config& c, bool carrier, bool offset) {
  TrapParams t;
  t.omega_z = two_pi_hz(1e6 * positive(c, "trap", "omega_z_mhz_2pi", 2.1));
  t.eta = c.real("trap", "eta", 0.05);
  c.check(t.eta > 0.0 && t.eta < 0.3, "trap", "eta", "must be in (0, 0.3)");
  if (carrier) t.omega_0 = two_pi_hz(1e3 * non_negative(c, "trap", "carrier_rabi_khz_2pi", 200.0));
  if (offset) t.detuning_offset = two_pi_hz(1e3 * c.real("trap", "detuning_offset_khz_2pi", 0.0));
  return t;
}

inline SqueezeParam read_squeeze(const Config& c, bool phase) {
  const double r = non_negative(c, "squeeze", "r", 0.0);
  return {r, phase ? c.real("squeeze", "phi_s_rad", 0.0) : 0.0};
}

inline double read_omega(const Config& c) { return two_pi_hz(1e3 * positive(c, "pulse", "omega_khz_2pi", 13.25)); }

inline double read_tau(const Config& c) { return 1e-6 * non_negative(c, "pulse", "tau_us", std::nullopt); }

inline void write_trace(Artifacts& out, const std::string& name, const PopulationTrace& t) {
  std::ostringstream os;
  write_trace_csv(os, t);
  out[name] = os.str();
}

inline Json fit_json(const estimate::FitResult& f) {
  Json params = Json::object();
  for (const auto& p : f.params) params[p.name] = {{"value", p.value}, {"se", p.se}, {"fixed", p.fixed}};
  Json corr = Json::array();
  for (Eigen::Index i = 0; i < f.correlation.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < f.correlation.cols(); ++j) row.push_back(f.correlation(i, j));
    corr.push_back(row);
  }
  const int dof = f.points - static_cast<int>(f.free_names().size());
  return {{"params", params},
          {"correlation", {{"names", f.free_names()}, {"matrix", corr}}},
          {"chi2", f.chi2},
          {"residual_norm", f.residual_norm},
          {"points", f.points},
          {"dof", dof},
          {"reduced_chi2", dof > 0 ? f.chi2 / dof : 0.0},
          {"iterations", f.iterations},
          {"converged", f.converged},
          {"singular", f.singular},
          {"degenerate", f.degenerate},
          {"warnings", f.warnings}};
}

inline PopulationTrace maybe_noisy(PopulationTrace t, bool noisy, const RunContext& ctx, std::uint64_t index) {
  if (!noisy) return t;
  auto rng = stream(ctx, index);
  return with_projection_noise(std::move(t), rng);
}

/// Drive phase that points the force along the squeezed (or anti-squeezed) axis.
inline double axis_phi_d(const SqueezeParam& xi, bool squeezed) {
  return (squeezed ? -xi.phi_s - kPi : -xi.phi_s) + 0.0;
}

// ---------------------------------------------------------------------------

inline Job overlap_scan(const Config& c, const RunContext& ctx) {
  const double omega = read_omega(c);
  const double omega_khz = c.real("pulse", "omega_khz_2pi", 13.25);
  const double r = read_squeeze(c, false).r;
  const double t_max = positive(c, "overlap", "tau_max_us", 120.0);
  const double t_step = positive(c, "overlap", "tau_step_us", 1.0);
  const auto dphis = c.reals("overlap", "delta_phi_rad", std::vector<double>{0.0, kPi / 2.0});
  const bool ground = c.boolean("overlap", "include_ground", true);
  const double a = c.real("overlap", "contrast_a", 1.0);
  const double b = c.real("overlap", "contrast_b", 1.0);
  const int reps = count(c, "overlap", "reps", 100, 1, 1000000000);
  const bool noisy = c.boolean("overlap", "projection_noise", false);
  try {
    signals::check_contrast(a, b);
  } catch (const std::domain_error& e) {
    c.fail("overlap", "contrast_b", e.what());
  }
  return [=] {
    struct Curve {
      std::string name;
      double r, dphi;
    };
    std::vector<Curve> curves;
    if (ground) curves.push_back({"ground", 0.0, 0.0});
    for (double d : dphis) curves.push_back({"dphi_" + label(d), r, d});
    const auto t_us = grid(0.0, t_max, t_step);

    Artifacts out;
    std::vector<std::string> names = {"t_us"};
    std::vector<std::vector<double>> cols = {t_us};
    Json summary = {{"omega_khz_2pi", omega_khz}, {"r", r}};
    Json traces = Json::object();
    double ground_half = 0.0;
    for (std::size_t k = 0; k < curves.size(); ++k) {
      const auto& cv = curves[k];
      std::vector<double> t_s, p;
      for (double t : t_us) {
        t_s.push_back(1e-6 * t);
        p.push_back(signals::spin_population_model(1e-6 * t, omega, cv.r, cv.dphi, a, b));
      }
      names.push_back("p_down_" + cv.name);
      cols.push_back(p);
      const auto trace = maybe_noisy(make_trace(ScanKind::Duration, t_s, p, reps), noisy, ctx, k);
      write_trace(out, "trace_" + cv.name + ".csv", trace);
      // X = 1/2 where 2|alpha|^2 (e^{2r} c^2 + e^{-2r} s^2) = ln 2.
      const double c2 = std::pow(std::cos(cv.dphi), 2), s2 = std::pow(std::sin(cv.dphi), 2);
      const double k_eff = std::exp(2.0 * cv.r) * c2 + std::exp(-2.0 * cv.r) * s2;
      const double half = 2.0 / omega * std::sqrt(std::log(2.0) / (2.0 * k_eff));
      if (cv.name == "ground") ground_half = half;
      traces[cv.name] = {{"r", cv.r}, {"delta_phi_rad", cv.dphi}, {"half_decay_us", 1e6 * half}};
      if (ground_half > 0.0) traces[cv.name]["half_decay_ratio_to_ground"] = half / ground_half;
    }
    std::ostringstream os;
    write_columns_csv(os, names, cols);
    out["overlap_scan.csv"] = os.str();
    summary["traces"] = traces;
    out["overlap_scan.json"] = dump(summary);
    return out;
  };
}

inline Job phase_scan(const Config& c, const RunContext& ctx) {
  const double omega = read_omega(c);
  const double tau = read_tau(c);
  const auto xi = read_squeeze(c, true);
  const int points = count(c, "phase", "points", 81, 2, 1000000);
  const double lo = c.real("phase", "phi_min_rad", -kPi);
  const double hi = c.real("phase", "phi_max_rad", kPi);
  c.check(hi > lo, "phase", "phi_max_rad", "must exceed phi_min_rad");
  const double a = c.real("phase", "contrast_a", 1.0);
  const double b = c.real("phase", "contrast_b", 1.0);
  const int reps = count(c, "phase", "reps", 100, 1, 1000000000);
  const bool noisy = c.boolean("phase", "projection_noise", false);
  try {
    signals::check_contrast(a, b);
  } catch (const std::domain_error& e) {
    c.fail("phase", "contrast_b", e.what());
  }
  return [=] {
    const auto phi = fock::detail::linspace(lo, hi, points);
    std::vector<double> p;
    for (double f : phi) p.push_back(signals::phase_scan_model(f, tau, omega, xi, a, b));
    Artifacts out;
    write_trace(out, "phase_scan.csv", maybe_noisy(make_trace(ScanKind::Phase, phi, p, reps), noisy, ctx, 0));
    return out;
  };
}

inline Job revival(const Config& c, const RunContext&) {
  const double omega = read_omega(c);
  const double phi_d = c.real("pulse", "phi_d_rad", 0.0);
  const double tau = read_tau(c);
  const auto xi = read_squeeze(c, true);
  const auto trap = read_trap(c, false, true);
  const double tau2 = 1e-6 * non_negative(c, "revival", "return_tau_us", tau * 1e6);
  const auto model = spinboson::parse_model(c.choice("revival", "model", {"lda", "full"}, "lda"));
  const double dt = 1e-6 * positive(c, "revival", "sample_dt_us", 1.0);
  c.check(tau > 0.0, "pulse", "tau_us", "must be > 0");
  return [=] {
    const SdfPulse force{omega, phi_d, tau, false};
    std::vector<SdfPulse> pulses{force};
    if (tau2 > 0.0) pulses.push_back(force.returning(tau2));
    int dim;
    if (trap.detuning_offset != 0.0) {
      dim = noise::sequence_dim(pulses, xi);
    } else {
      const double reach = omega * std::max(tau, std::abs(tau - tau2)) / 2.0;
      const Complex along = std::polar(reach, xi.phi_s / 2.0);
      dim = std::max(required_dim(along, xi), required_dim(along * kI, xi));
    }
    const auto init = SpinMotionState::spin_down(fock::squeezed_vacuum(xi, dim));
    spinboson::SequenceOptions opt;
    opt.sample_dt = dt;
    opt.detuning = trap.detuning_offset;
    std::vector<spinboson::SeriesRow> rows;
    double max_leak = 0.0;
    spinboson::propagate_sequence(init, pulses, trap, model, opt, [&](double t, const CVector& psi) {
      const SpinMotionState s(psi);
      rows.push_back(spinboson::summarize(t, s));
      max_leak = std::max(max_leak, s.leakage());
    });
    if (max_leak > 1e-6) throw TruncationError("revival: population reached the Fock cutoff", max_leak, dim);
    const Complex ideal = spinboson::alpha_of_tau(force, tau) + (tau2 > 0.0 ? -spinboson::alpha_of_tau(force, tau2) : 0.0);
    Artifacts out;
    std::ostringstream os;
    spinboson::write_series_csv(os, rows);
    out["revival_series.csv"] = os.str();
    out["revival.json"] = dump({{"dim", dim},
                                {"model", std::string(spinboson::model_name(model))},
                                {"final_p_down", rows.back().p_down},
                                {"final_alpha_plus", {rows.back().alpha_plus.real(), rows.back().alpha_plus.imag()}},
                                {"ideal_final_alpha_plus", {ideal.real(), ideal.imag()}},
                                {"branch_separation_at_tau1", 2.0 * omega * tau / 2.0},
                                {"max_leakage", max_leak}});
    return out;
  };
}

inline Job bsb(const Config& c, const RunContext& ctx) {
  const auto trap = read_trap(c, true, false);
  const double r = non_negative(c, "squeeze", "r", 1.08);
  const double abs_alpha = non_negative(c, "bsb", "abs_alpha", 2.4);
  const bool squeezed = c.choice("bsb", "axis", {"squeezed", "anti"}, "squeezed") == "squeezed";
  const double kappa = c.real("bsb", "kappa", 1.0);
  c.check(kappa > 0.0 && kappa <= 1.0, "bsb", "kappa", "must be in (0, 1]");
  const int n_max = count(c, "bsb", "n_max", 29, 0, 29);
  const double t_max = positive(c, "bsb", "t_max_us", 600.0);
  const double t_step = positive(c, "bsb", "t_step_us", 1.0);
  const double gamma = non_negative(c, "bsb", "gamma_per_s", 500.0);
  const double b = c.real("bsb", "b_per_s", 0.0);
  const int reps = count(c, "bsb", "reps", 300, 1, 1000000000);
  const bool noisy = c.boolean("bsb", "projection_noise", true);
  const bool fit = c.boolean("bsb", "fit", true);
  const bool fit_kappa = c.boolean("bsb", "fit_kappa", false);
  c.check(trap.omega_0 > 0.0, "trap", "carrier_rabi_khz_2pi", "must be > 0 for a BSB trace");
  return [=] {
    const auto geometry = squeezed ? estimate::Geometry::SqueezedAxis : estimate::Geometry::AntiSqueezedAxis;
    const SqueezeParam xi{r, estimate::geometry_phi_s(geometry)};
    const auto truth = signals::dsq_number_dist(Complex{abs_alpha, 0.0}, xi, kappa, n_max);
    signals::BsbModelParams m;
    m.omega_0 = trap.omega_0;
    m.eta = trap.eta;
    m.gamma = gamma;
    m.b = b;
    m.n_max = n_max;
    std::vector<double> t_s;
    for (double t : grid(0.0, t_max, t_step)) t_s.push_back(1e-6 * t);
    auto p = signals::bsb_trace(t_s, truth, m);
    for (auto& v : p) v = std::clamp(v, 0.0, 1.0);
    const auto trace = maybe_noisy(make_trace(ScanKind::Duration, t_s, p, reps), noisy, ctx, 0);

    Artifacts out;
    write_trace(out, "bsb_trace.csv", trace);
    Json summary = {{"truth", {{"abs_alpha", abs_alpha}, {"r", r}, {"kappa", kappa},
                               {"axis", squeezed ? "squeezed" : "anti"}, {"tail_above_n_max", truth.tail}}}};
    std::vector<std::vector<double>> cols(2);
    for (int n = 0; n <= n_max; ++n) {
      cols[0].push_back(n);
      cols[1].push_back(truth.p[n]);
    }
    std::vector<std::string> names = {"n", "p_true"};
    if (fit) {
      estimate::BsbFitConfig cfg;
      cfg.guess = m;
      const auto bf = estimate::fit_bsb_trace(trace, cfg);
      names.insert(names.end(), {"p_fit", "p_fit_se"});
      cols.push_back(bf.p.p);
      cols.push_back(bf.p.sigma);
      double tv = 0.0;
      for (int n = 0; n <= n_max; ++n) tv += std::abs(bf.p.p[n] - truth.p[n]);
      const auto dsq = estimate::fit_dsq_pn(bf.p, geometry, fit_kappa);
      summary["bsb_fit"] = fit_json(bf.params);
      summary["bsb_fit"]["condition_number"] = bf.condition_number;
      summary["total_variation"] = 0.5 * tv;
      summary["dsq_fit"] = fit_json(dsq);
    }
    std::ostringstream os;
    write_columns_csv(os, names, cols);
    out["bsb_pn.csv"] = os.str();
    out["bsb.json"] = dump(summary);
    return out;
  };
}

inline Job qfunc(const Config& c, const RunContext&) {
  const auto xi = read_squeeze(c, true);
  const Complex alpha{c.real("qfunc", "alpha_re", 0.0), c.real("qfunc", "alpha_im", 0.0)};
  const bool mixture = c.boolean("qfunc", "mixture", false);
  fock::PhaseGridSpec g;
  g.x_min = c.real("qfunc", "x_min", -6.0);
  g.x_max = c.real("qfunc", "x_max", 6.0);
  g.p_min = c.real("qfunc", "p_min", -6.0);
  g.p_max = c.real("qfunc", "p_max", 6.0);
  g.nx = count(c, "qfunc", "nx", 121, 1, 4001);
  g.np = count(c, "qfunc", "np", 121, 1, 4001);
  c.check(g.x_max > g.x_min, "qfunc", "x_max", "must exceed x_min");
  c.check(g.p_max > g.p_min, "qfunc", "p_max", "must exceed p_min");
  return [=] {
    const int dim = required_dim(alpha, xi);
    auto grid_q = fock::husimi_q(fock::displaced_squeezed(alpha, xi, dim), g);
    if (mixture) {
      const auto other = fock::husimi_q(fock::displaced_squeezed(-alpha, xi, dim), g);
      grid_q.values = 0.5 * (grid_q.values + other.values);
    }
    Artifacts out;
    std::ostringstream os;
    grid_q.write_csv(os);
    out["qfunc.csv"] = os.str();
    out["qfunc.json"] = dump({{"dim", dim}, {"integral", grid_q.integral()}, {"mixture", mixture}});
    return out;
  };
}

inline Job noise_sim(const Config& c, const RunContext& ctx) {
  const auto axes = c.words("noise", "axes", {"pulse", "ground", "squeezed", "anti"}, std::vector<std::string>{"pulse"});
  const bool custom = std::find(axes.begin(), axes.end(), "pulse") != axes.end();
  const double omega = read_omega(c);
  const double tau = read_tau(c);
  const double tau_us = c.real("pulse", "tau_us");
  c.check(tau > 0.0, "pulse", "tau_us", "must be > 0");
  const double phi_d = custom ? c.real("pulse", "phi_d_rad", 0.0) : 0.0;
  const auto xi = read_squeeze(c, true);
  const auto trap = read_trap(c, false, false);
  noise::NoiseModel m;
  const bool by_field = c.has("noise", "field_mg");
  if (by_field) {
    c.check(!c.has("noise", "detuning_khz_2pi"), "noise", "field_mg", "give field_mg or detuning_khz_2pi, not both");
    m.detuning_amplitude = noise::detuning_from_field(
        non_negative(c, "noise", "field_mg", 0.0),
        positive(c, "noise", "khz_per_mg", noise::kDefaultKhzPerMilligauss));
  } else {
    m.detuning_amplitude = two_pi_hz(1e3 * non_negative(c, "noise", "detuning_khz_2pi", 1.5));
  }
  m.line_freq = positive(c, "noise", "line_freq_hz", 50.0);
  m.heating_rate = non_negative(c, "noise", "heating_quanta_per_s", 10.0);
  m.shots = count(c, "noise", "shots", 100, 1, 10000000);
  m.seed = ctx.seed;
  const double dt = 1e-6 * positive(c, "noise", "sample_dt_us", 1.0);
  const auto model = spinboson::parse_model(c.choice("noise", "model", {"lda", "full"}, "lda"));
  return [=] {
    Artifacts out;
    Json summary = {{"detuning_amplitude_khz_2pi", m.detuning_amplitude / two_pi_hz(1e3)},
                    {"heating_quanta_per_s", m.heating_rate},
                    {"shots", m.shots},
                    {"tau_us", tau_us}};
    const auto t2 = noise::ramsey_t2(m);
    summary["ramsey_t2_us"] = t2 ? Json(*t2 * 1e6) : Json(nullptr);
    Json runs = Json::object();
    for (const auto& axis : axes) {
      SqueezeParam x = xi;
      double pd = phi_d;
      if (axis == "ground") x = SqueezeParam{0.0, 0.0};
      if (axis == "squeezed" || axis == "anti") pd = axis_phi_d(xi, axis == "squeezed");
      auto sc = noise::revival_scenario(x, omega, pd, tau, m.heating_rate, model, dt);
      sc.trap = trap;
      const auto e = noise::ensemble_average(sc, m, ctx.threads);
      std::ostringstream os;
      write_ensemble_csv(os, e.trace);
      out["noise_" + axis + ".csv"] = os.str();
      const auto& last = e.trace.samples.back();
      runs[axis] = {{"dim", sc.initial.dim()},
                    {"phi_d_rad", pd},
                    {"r", x.r},
                    {"revival_peak", noise::revival_peak(e.trace, 1.5 * tau)},
                    {"final_p_down", last.p_down},
                    {"final_sem", last.sem},
                    {"final_mean_n", e.mean_n.back()},
                    {"jumps", e.total_jumps}};
    }
    summary["runs"] = runs;
    out["noise_sim.json"] = dump(summary);
    return out;
  };
}

inline PopulationTrace load_trace(const Config& c, const std::string& section, const std::string& key) {
  const std::filesystem::path rel = c.text(section, key);
  const auto path = rel.is_absolute() ? rel : c.directory() / rel;
  std::ifstream in(path, std::ios::binary);
  if (!in) c.fail(section, key, "cannot open '" + path.string() + "'");
  try {
    return read_trace_csv(in);
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

inline Job fit(const Config& c, const RunContext& ctx) {
  const auto trace = load_trace(c, "fit", "input_csv");
  const auto model = c.choice("fit", "model", {"overlap", "bsb"});
  if (model == "overlap") {
    estimate::OverlapFitConfig cfg;
    cfg.omega = two_pi_hz(1e3 * positive(c, "fit", "omega_khz_2pi", 13.25));
    cfg.r = non_negative(c, "fit", "r", 0.0);
    cfg.a = c.real("fit", "contrast_a", 1.0);
    cfg.b = c.real("fit", "contrast_b", 1.0);
    cfg.fix_r = c.boolean("fit", "fix_r", false);
    cfg.fix_a = c.boolean("fit", "fix_a", false);
    cfg.fix_b = c.boolean("fit", "fix_b", false);
    cfg.max_evaluations = count(c, "fit", "max_evaluations", 4000, 1, 100000000);
    if (trace.kind == ScanKind::Duration) {
      cfg.delta_phi = c.real("fit", "delta_phi_rad", 0.0);
      cfg.fix_omega = c.boolean("fit", "fix_omega", false);
    } else {
      cfg.tau = 1e-6 * positive(c, "fit", "tau_us", std::nullopt);
      cfg.phi_s = c.real("fit", "phi_s_rad", 0.0);
      cfg.fix_phi_s = c.boolean("fit", "fix_phi_s", false);
    }
    c.check(trace.size() >= 10, "fit", "input_csv", "need at least 10 rows for an overlap fit");
    return [=] {
      const auto f = estimate::fit_overlap_trace(trace, cfg);
      Json j = fit_json(f);
      j["model"] = "overlap";
      j["kind"] = trace.kind == ScanKind::Duration ? "duration" : "phase";
      j["units"] = {{"omega", "rad/s"}, {"r", "1"}, {"A", "1"}, {"B", "1"}, {"phi_s", "rad"}};
      return Artifacts{{"fit.json", dump(j)}};
    };
  }
  signals::BsbModelParams guess;
  guess.omega_0 = two_pi_hz(1e3 * non_negative(c, "fit", "carrier_rabi_khz_2pi", 0.0));
  guess.eta = c.real("fit", "eta", 0.05);
  c.check(guess.eta > 0.0 && guess.eta < 0.3, "fit", "eta", "must be in (0, 0.3)");
  guess.gamma = non_negative(c, "fit", "gamma_per_s", 0.0);
  guess.b = c.real("fit", "b_per_s", 0.0);
  guess.n_max = count(c, "fit", "n_max", 29, 0, 29);
  const bool squeezed = c.choice("fit", "axis", {"squeezed", "anti"}, "squeezed") == "squeezed";
  const bool fit_kappa = c.boolean("fit", "fit_kappa", false);
  if (trace.kind != ScanKind::Duration) c.fail("fit", "input_csv", "bsb fits need a t_us trace");
  c.check(trace.size() >= static_cast<std::size_t>(3 * std::max(guess.n_max, 1)), "fit", "input_csv",
          "need at least 3 n_max rows for a bsb fit");
  (void)ctx;
  return [=] {
    estimate::BsbFitConfig cfg;
    cfg.guess = guess;
    const auto bf = estimate::fit_bsb_trace(trace, cfg);
    const auto geometry = squeezed ? estimate::Geometry::SqueezedAxis : estimate::Geometry::AntiSqueezedAxis;
    const auto dsq = estimate::fit_dsq_pn(bf.p, geometry, fit_kappa);
    Json j = fit_json(bf.params);
    j["model"] = "bsb";
    j["condition_number"] = bf.condition_number;
    j["p_n"] = bf.p.p;
    j["p_n_se"] = bf.p.sigma;
    j["dsq_fit"] = fit_json(dsq);
    j["units"] = {{"omega_0", "rad/s"}, {"gamma", "1/s"}, {"b", "1/s"}};
    return Artifacts{{"fit.json", dump(j)}};
  };
}

}  // namespace detail

/** \brief Validate \p cfg for \p command and return the job that runs it.
 *
 *  Throws ConfigError, SchemaError or std::invalid_argument on bad input.
 */
inline Job prepare(const std::string& command, const Config& cfg, const RunContext& ctx) {
  if (cfg.has("run", "kind")) {
    const auto kind = cfg.choice("run", "kind", commands());
    if (kind != command) cfg.fail("run", "kind", "config is for '" + kind + "', not '" + command + "'");
  }
  cfg.has("run", "seed");
  Job job;
  if (command == "overlap-scan") job = detail::overlap_scan(cfg, ctx);
  else if (command == "phase-scan") job = detail::phase_scan(cfg, ctx);
  else if (command == "revival") job = detail::revival(cfg, ctx);
  else if (command == "bsb") job = detail::bsb(cfg, ctx);
  else if (command == "qfunc") job = detail::qfunc(cfg, ctx);
  else if (command == "noise-sim") job = detail::noise_sim(cfg, ctx);
  else if (command == "fit") job = detail::fit(cfg, ctx);
  else throw std::invalid_argument("unknown subcommand '" + command + "'");
  cfg.reject_unknown();
  return job;
}

/// Seed from [run] seed, unless overridden.
inline std::uint64_t config_seed(const Config& cfg, std::uint64_t fallback) {
  const long long s = cfg.integer("run", "seed", static_cast<long long>(fallback));
  cfg.check(s >= 0, "run", "seed", "must be >= 0");
  return static_cast<std::uint64_t>(s);
}

}  // namespace sqcat::cli
