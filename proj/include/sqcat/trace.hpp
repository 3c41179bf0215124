#pragma once

// Spin-population traces and their CSV form.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <random>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace sqcat {

/// Malformed or mismatched input data.
class SchemaError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ScanKind { Duration, Phase };

struct TraceSample {
  double x = 0.0;       // s for Duration scans, rad for Phase scans
  double p_down = 0.0;  // in [0, 1]
  int reps = 1;
  double sem = 0.0;     // Monte-Carlo standard error, when attached
};

struct PopulationTrace {
  ScanKind kind = ScanKind::Duration;
  std::vector<TraceSample> samples;

  std::size_t size() const { return samples.size(); }

  void validate() const {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& s = samples[i];
      if (!(s.p_down >= 0.0 && s.p_down <= 1.0)) {
        throw SchemaError("trace row " + std::to_string(i + 1) + ": p_down outside [0, 1]");
      }
      if (s.reps < 1) throw SchemaError("trace row " + std::to_string(i + 1) + ": reps < 1");
      if (i > 0 && !(s.x > samples[i - 1].x)) {
        throw SchemaError("trace row " + std::to_string(i + 1) + ": abscissa not increasing");
      }
    }
  }
};

/// Noiseless trace with reps attached to every point.
inline PopulationTrace make_trace(ScanKind kind, const std::vector<double>& x,
                                  const std::vector<double>& p_down, int reps) {
  if (x.size() != p_down.size()) throw SchemaError("make_trace: length mismatch");
  PopulationTrace t;
  t.kind = kind;
  for (std::size_t i = 0; i < x.size(); ++i) t.samples.push_back({x[i], p_down[i], reps, 0.0});
  t.validate();
  return t;
}

/// Replace each P by k/reps with k ~ Binomial(reps, P).
inline PopulationTrace with_projection_noise(PopulationTrace t, std::mt19937_64& rng) {
  for (auto& s : t.samples) {
    std::binomial_distribution<int> draw(s.reps, std::clamp(s.p_down, 0.0, 1.0));
    s.p_down = static_cast<double>(draw(rng)) / s.reps;
  }
  return t;
}

/// Reads `t_us,p_down,reps` or `phi_rad,p_down,reps`; times are returned in seconds.
inline PopulationTrace read_trace_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw SchemaError("trace CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  PopulationTrace trace;
  double x_scale = 1.0;
  if (line == "t_us,p_down,reps") {
    trace.kind = ScanKind::Duration;
    x_scale = 1e-6;
  } else if (line == "phi_rad,p_down,reps") {
    trace.kind = ScanKind::Phase;
  } else {
    throw SchemaError("trace CSV header must be 't_us,p_down,reps' or 'phi_rad,p_down,reps', got '" +
                      line + "'");
  }
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    TraceSample s;
    char c1 = 0, c2 = 0;
    double reps = 0.0;
    if (!(row >> s.x >> c1 >> s.p_down >> c2 >> reps) || c1 != ',' || c2 != ',' ||
        reps != std::floor(reps)) {
      throw SchemaError("trace CSV line " + std::to_string(lineno) + ": expected x,p_down,reps");
    }
    std::string rest;
    if (row >> rest) {
      throw SchemaError("trace CSV line " + std::to_string(lineno) + ": extra columns");
    }
    s.x *= x_scale;
    s.reps = static_cast<int>(reps);
    trace.samples.push_back(s);
  }
  if (trace.samples.empty()) throw SchemaError("trace CSV has no data rows");
  trace.validate();
  return trace;
}

inline void write_trace_csv(std::ostream& os, const PopulationTrace& trace) {
  const bool duration = trace.kind == ScanKind::Duration;
  os << (duration ? "t_us" : "phi_rad") << ",p_down,reps\n";
  char buf[96];
  for (const auto& s : trace.samples) {
    std::snprintf(buf, sizeof buf, "%.6f,%.12f,%d\n", duration ? s.x * 1e6 : s.x, s.p_down,
                  s.reps);
    os << buf;
  }
}

/// Ensemble form: t_us,p_down_mean,p_down_sem,shots.
inline void write_ensemble_csv(std::ostream& os, const PopulationTrace& trace) {
  os << "t_us,p_down_mean,p_down_sem,shots\n";
  char buf[112];
  for (const auto& s : trace.samples) {
    std::snprintf(buf, sizeof buf, "%.6f,%.12f,%.12f,%d\n", s.x * 1e6, s.p_down, s.sem, s.reps);
    os << buf;
  }
}

/// Columns of equal length with a header row.
inline void write_columns_csv(std::ostream& os, const std::vector<std::string>& names,
                              const std::vector<std::vector<double>>& columns) {
  for (std::size_t i = 0; i < names.size(); ++i) os << (i ? "," : "") << names[i];
  os << '\n';
  const std::size_t rows = columns.empty() ? 0 : columns.front().size();
  char buf[40];
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      std::snprintf(buf, sizeof buf, "%.12g", columns[c][r]);
      os << (c ? "," : "") << buf;
    }
    os << '\n';
  }
}

}  // namespace sqcat
