#pragma once

#include <cmath>
#include <fstream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "scramble/core.hpp"
#include "scramble/rate_laws.hpp"

namespace scramble {

//! Strictly increasing time grid (ms) with one value per sample.
struct TimeSeries {
  std::vector<double> t;
  std::vector<double> y;

  std::size_t size() const { return t.size(); }

  void validate() const {
    require(t.size() == y.size(), "TimeSeries: time and value lengths differ");
    require(t.size() >= 2, "TimeSeries: need at least two samples");
    for (std::size_t i = 1; i < t.size(); ++i)
      require(t[i] > t[i - 1], "TimeSeries: times must increase strictly");
  }
};

struct FitResult {
  double prefactor = 0.0;
  double exponent = 0.0;
  double rms_log_residual = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
};

//! Midpoint estimate of d ln y / d t; sample i sits at (t_i + t_{i+1}) / 2.
//! Signed: decaying series give negative values.
inline TimeSeries log_derivative(const TimeSeries& s) {
  s.validate();
  for (std::size_t i = 0; i < s.size(); ++i)
    require(s.y[i] > 0.0,
            "log_derivative: nonpositive value at row " + std::to_string(i + 1));
  TimeSeries out;
  out.t.reserve(s.size() - 1);
  out.y.reserve(s.size() - 1);
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    out.t.push_back(0.5 * (s.t[i] + s.t[i + 1]));
    out.y.push_back((std::log(s.y[i + 1]) - std::log(s.y[i])) / (s.t[i + 1] - s.t[i]));
  }
  return out;
}

//! Decay-rate magnitude -d ln y / d t of a decaying series.
inline TimeSeries decay_rate(const TimeSeries& s) {
  TimeSeries out = log_derivative(s);
  for (double& v : out.y) v = -v;
  return out;
}

//! Least squares of ln y on ln x over the window [window_lo, window_hi] on x:
//! y = prefactor * x^exponent.
inline FitResult powerlaw_fit(std::span<const double> x, std::span<const double> y,
                              double window_lo, double window_hi) {
  require(x.size() == y.size(), "powerlaw_fit: abscissa and ordinate lengths differ");
  require(window_lo < window_hi, "powerlaw_fit: empty window");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < window_lo || x[i] > window_hi) continue;
    require(x[i] > 0.0 && y[i] > 0.0,
            "powerlaw_fit: nonpositive sample inside the window at row " + std::to_string(i + 1));
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  require(lx.size() >= 2, "powerlaw_fit: fewer than two samples inside the window");
  double n = static_cast<double>(lx.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
  }
  double mean_x = sx / n, mean_y = sy / n;
  // centered sums: the spread term cannot cancel catastrophically, so the
  // degeneracy test below is meaningful
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    double dx = lx[i] - mean_x;
    sxx += dx * dx;
    sxy += dx * (ly[i] - mean_y);
  }
  require(sxx > 1e-24 * n * std::max(1.0, mean_x * mean_x),
          "powerlaw_fit: abscissa is degenerate inside the window");
  FitResult r;
  r.exponent = sxy / sxx;
  double intercept = mean_y - r.exponent * mean_x;
  r.prefactor = std::exp(intercept);
  double ss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    double resid = ly[i] - (intercept + r.exponent * lx[i]);
    ss += resid * resid;
  }
  r.rms_log_residual = std::sqrt(ss / n);
  r.window_lo = window_lo;
  r.window_hi = window_hi;
  return r;
}

//! Reads `t_ms,value` rows; `#` lines are provenance and skipped.
inline TimeSeries ingest_series(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open series '" + path + "'");
  std::string line;
  long file_line = 0;
  auto next_data_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++file_line;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      return true;
    }
    return false;
  };
  require(next_data_line(), "series '" + path + "' is empty");
  require(line == "t_ms,value", "series '" + path + "': expected header 't_ms,value'");
  TimeSeries s;
  long row = 0;
  while (next_data_line()) {
    ++row;
    std::string where = "row " + std::to_string(row) + " (line " + std::to_string(file_line) + ")";
    std::stringstream ss(line);
    std::string ft, fy, extra;
    bool ok = static_cast<bool>(std::getline(ss, ft, ',')) && static_cast<bool>(std::getline(ss, fy, ','));
    require(ok && !std::getline(ss, extra),
            "series '" + path + "': malformed " + where);
    double tv = parse_double(ft, "series '" + path + "' time, " + where);
    double yv = parse_double(fy, "series '" + path + "' value, " + where);
    if (!s.t.empty()) {
      require(tv != s.t.back(), "series '" + path + "': duplicate time at " + where);
      require(tv > s.t.back(), "series '" + path + "': time decreases at " + where);
    }
    s.t.push_back(tv);
    s.y.push_back(yv);
  }
  require(s.t.size() >= 2, "series '" + path + "': need at least two rows");
  return s;
}

inline void write_series_csv(std::ostream& out, const TimeSeries& s) {
  out << "t_ms,value\n";
  for (std::size_t i = 0; i < s.t.size(); ++i)
    out << format_double(s.t[i]) << ',' << format_double(s.y[i]) << '\n';
}

//! Fit window for a growth trace on n_levels ladder sites: opens once K
//! reaches 2, closes when K reaches half the ladder (or at the last sample).
inline std::pair<double, double> growth_window(const TimeSeries& k_trace, int n_levels) {
  k_trace.validate();
  require(n_levels >= 1, "growth_window: n_levels must be positive");
  double lo = -1.0, hi = -1.0;
  for (std::size_t i = 0; i < k_trace.size(); ++i) {
    if (lo < 0.0 && k_trace.y[i] >= 2.0) lo = k_trace.t[i];
    if (hi < 0.0 && k_trace.y[i] >= 0.5 * n_levels) hi = k_trace.t[i];
  }
  if (hi < 0.0) hi = k_trace.t.back();
  require(lo >= 0.0 && lo < hi,
          "growth_window: trace never leaves the seed regime (K < 2) before saturating");
  return {lo, hi};
}

//! Fidelity synthesized from a cluster trajectory and a decay law:
//! f(t) = exp(-integral_0^t rate(K(s)) ds), trapezoid quadrature on the
//! trace grid.  The first sample must sit at t = 0.
inline TimeSeries integrate_decay(const TimeSeries& k_trace, const AnsatzLaw& law) {
  k_trace.validate();
  require(k_trace.t.front() == 0.0, "integrate_decay: trace must start at t = 0");
  TimeSeries f;
  f.t = k_trace.t;
  f.y.resize(k_trace.size());
  double acc = 0.0;
  double prev_rate = ansatz_rate(law, k_trace.y.front());
  f.y[0] = 1.0;
  for (std::size_t i = 1; i < k_trace.size(); ++i) {
    double rate = ansatz_rate(law, k_trace.y[i]);
    acc += 0.5 * (prev_rate + rate) * (k_trace.t[i] - k_trace.t[i - 1]);
    f.y[i] = std::exp(-acc);
    prev_rate = rate;
  }
  return f;
}

//! Recovers the decay law chi'(K) = prefactor * K^exponent from a fidelity
//! series and the matching cluster trajectory: midpoint decay rates against
//! geometric-mean cluster sizes, power-law fit over [k_lo, k_hi].
inline FitResult fit_decay_vs_k(const TimeSeries& fidelity, const TimeSeries& k_trace,
                                double k_lo, double k_hi) {
  fidelity.validate();
  k_trace.validate();
  require(fidelity.size() == k_trace.size(), "fit_decay_vs_k: series lengths differ");
  for (std::size_t i = 0; i < fidelity.size(); ++i)
    require(fidelity.t[i] == k_trace.t[i], "fit_decay_vs_k: time grids differ at row " +
                                               std::to_string(i + 1));
  TimeSeries rate = decay_rate(fidelity);
  std::vector<double> k_mid(rate.size());
  for (std::size_t i = 0; i + 1 < k_trace.size(); ++i) {
    require(k_trace.y[i] > 0.0 && k_trace.y[i + 1] > 0.0,
            "fit_decay_vs_k: nonpositive cluster size at row " + std::to_string(i + 1));
    k_mid[i] = std::sqrt(k_trace.y[i] * k_trace.y[i + 1]);
  }
  return powerlaw_fit(k_mid, rate.y, k_lo, k_hi);
}

}  // namespace scramble
