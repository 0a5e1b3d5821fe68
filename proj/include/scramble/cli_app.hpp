#pragma once

#include <CLI11.hpp>
#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "scramble/core.hpp"
#include "scramble/exact_engine.hpp"
#include "scramble/lg_model.hpp"
#include "scramble/scaling_fit.hpp"
#include "scramble/scrambling_metrics.hpp"
#include "scramble/verify.hpp"
#include "scramble/version.hpp"

namespace scramble::cli {

struct GlobalOptions {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  int threads = 1;
};

//! Creates the output directory and stamps every file with one provenance
//! line carrying the version, the config digest and the seed.
class OutputWriter {
 public:
  OutputWriter(const std::string& dir, std::uint64_t config_hash, std::uint64_t seed)
      : dir_(dir) {
    std::filesystem::create_directories(dir_);
    std::ostringstream line;
    line << "# scramble v" << version_string << " config_fnv1a=" << std::hex << config_hash
         << std::dec << " seed=" << seed;
    provenance_ = line.str();
  }

  std::ofstream open(const std::string& name) const {
    std::filesystem::path p = dir_ / name;
    std::ofstream f(p);
    require(f.good(), "cannot open output file '" + p.string() + "'");
    f << provenance_ << '\n';
    return f;
  }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::string provenance_;
};

inline std::vector<double> make_grid(double lo, double hi, int points, bool log_spaced) {
  require(points >= 2, "time grid needs at least two points");
  require(lo < hi, "time grid bounds out of order");
  if (log_spaced) require(lo > 0.0, "log-spaced grid needs a positive lower bound");
  std::vector<double> g(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    double f = static_cast<double>(i) / (points - 1);
    g[static_cast<std::size_t>(i)] =
        log_spaced ? lo * std::pow(hi / lo, f) : lo + (hi - lo) * f;
  }
  g.front() = lo;
  g.back() = hi;
  return g;
}

inline void write_fit_header(std::ostream& out) {
  out << "quantity,prefactor,exponent,residual,window_lo,window_hi\n";
}

inline void write_fit_row(std::ostream& out, const std::string& quantity, const FitResult& r) {
  out << quantity << ',' << format_double(r.prefactor) << ',' << format_double(r.exponent) << ','
      << format_double(r.rms_log_residual) << ',' << format_double(r.window_lo) << ','
      << format_double(r.window_hi) << '\n';
}

inline void write_null_fit_row(std::ostream& out, const std::string& quantity) {
  double nan = std::nan("");
  out << quantity << ',' << format_double(nan) << ',' << format_double(nan) << ','
      << format_double(nan) << ',' << format_double(nan) << ',' << format_double(nan) << '\n';
}

// ---------------------------------------------------------------------------
// subcommand option blocks

struct IdealGrowthOptions {
  std::vector<int> n_list = {250, 500, 1000};
  double delta = 0.66;
  double d = 1.0;
  double t_min = 0.05;
  double t_max = 60.0;
  int t_points = 160;
  bool linear_grid = false;
  double rtol = 1e-10;
};

struct DecoherentGrowthOptions {
  int n = 1000;
  double delta = 0.66;
  double d = 1.0;
  std::string law = "power";
  double gamma1 = 0.1;
  double alpha = 0.96;
  double p = 0.05;
  double p_c = 0.026;
  double s = -0.911;
  double nu = -0.57;
  double alpha0 = 0.48;
  double alpha_inf = 0.96;
  double scale = 1.0;
  std::string rates_file;
  double t_ini = 0.0;
  double t_min = 0.0;
  double t_max = 60.0;
  int t_points = 240;
  double rtol = 1e-10;
};

struct SpectrumScanOptions {
  int n = 10;
  double delta = 0.66;
  double d = 1.0;
  double alpha = 0.96;
  double gamma1_min = 0.0;
  double gamma1_max = 2.0;
  int gamma1_points = 21;
  double crit_lo = 0.0;
  double crit_hi = 0.0;  // 0: use gamma1_max
};

struct KlocScanOptions {
  int n = 200000;
  double delta = 0.66;
  double d = 1.0;
  double p_min = 0.03;
  double p_max = 0.11;
  int p_points = 17;
  double p_c = 0.026;
  double s = -0.911;
  double nu = -0.57;
  double alpha0 = 0.48;
  double alpha_inf = 0.96;
  double scale = 1.0;
  double fit_lo = 0.03;
  double fit_hi = 0.11;
  double weak_lo = 0.0;  // both zero: skip the weak-branch fit
  double weak_hi = 0.0;
};

struct ExactVerifyOptions {
  int n_max = 5;
  int couplings = 5;
  int times = 10;
  double t_max = 2.0;
  double d_scale = 1.0;
  std::vector<double> p_list = {0.1, 0.5};
  bool inject_l_sign_error = false;
};

struct FitOptions {
  std::string mode = "synthetic";
  int n = 2000;
  double delta = 0.66;
  double d = 1.0;
  std::vector<double> p_list = {0.05, 0.08};
  double p_c = 0.026;
  double s = -0.911;
  double nu = -0.57;
  double alpha0 = 0.48;
  double alpha_inf = 0.96;
  double scale = 1.0;
  double t_max = 30.0;
  int t_points = 600;
  double k_lo = 3.0;
  double k_hi = 0.0;  // 0: auto, 0.3 n
  std::string abscissa = "perturbed";
  double rtol = 1e-10;
  std::string k_file;
  std::string fidelity_file;
  double file_p = 0.0;
};

// ---------------------------------------------------------------------------

inline int cmd_ideal_growth(const IdealGrowthOptions& o, const GlobalOptions& g,
                            const OutputWriter& out) {
  require(!o.n_list.empty(), "ideal-growth: empty n list");
  std::vector<double> times = make_grid(o.t_min, o.t_max, o.t_points, !o.linear_grid);
  std::vector<std::vector<double>> traces(o.n_list.size());
  parallel_for(o.n_list.size(), g.threads, [&](std::size_t i) {
    LgParams params{o.n_list[i], o.d, o.delta, PowerLaw{0.0, 1.0}};
    traces[i] = evolve_k_trace(build_upsilon(params), unit_cluster(params.n), times, o.rtol);
  });
  std::ofstream fits = out.open("ideal_growth_fit.csv");
  write_fit_header(fits);
  for (std::size_t i = 0; i < o.n_list.size(); ++i) {
    TimeSeries s;
    s.t = times;
    s.y = traces[i];
    std::ofstream f = out.open("ideal_growth_n" + std::to_string(o.n_list[i]) + ".csv");
    write_series_csv(f, s);
    auto [lo, hi] = growth_window(s, o.n_list[i]);
    write_fit_row(fits, "growth_n" + std::to_string(o.n_list[i]),
                  powerlaw_fit(s.t, s.y, lo, hi));
  }
  return 0;
}

inline RateLaw law_from_options(const DecoherentGrowthOptions& o) {
  if (o.law == "power") return PowerLaw{o.gamma1, o.alpha};
  if (o.law == "ansatz") return AnsatzLaw{o.p, o.p_c, o.s, o.nu, o.alpha0, o.alpha_inf, o.scale};
  if (o.law == "custom") {
    require(!o.rates_file.empty(), "decoherent-growth: custom law needs --rates-file");
    std::ifstream in(o.rates_file);
    require(in.good(), "cannot open rate table '" + o.rates_file + "'");
    std::string line;
    bool header_seen = false;
    CustomLaw cu;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      if (!header_seen) {
        require(line == "L,gamma_per_ms",
                "rate table '" + o.rates_file + "': expected header 'L,gamma_per_ms'");
        header_seen = true;
        continue;
      }
      std::stringstream ss(line);
      std::string fl, fg;
      require(static_cast<bool>(std::getline(ss, fl, ',')) && static_cast<bool>(std::getline(ss, fg)),
              "rate table '" + o.rates_file + "': malformed row '" + line + "'");
      std::uint64_t l = parse_u64(fl, "rate table level");
      require(l == cu.rates.size() + 1,
              "rate table '" + o.rates_file + "': levels must run 1..n in order");
      cu.rates.push_back(parse_double(fg, "rate table value"));
    }
    require(!cu.rates.empty(), "rate table '" + o.rates_file + "' has no rows");
    return cu;
  }
  throw Error("decoherent-growth: unknown law '" + o.law + "' (power|ansatz|custom)");
}

inline int cmd_decoherent_growth(const DecoherentGrowthOptions& o, const GlobalOptions&,
                                 const OutputWriter& out) {
  LgParams params{o.n, o.d, o.delta, law_from_options(o)};
  UpsilonMatrix u = build_upsilon(params);
  AmplitudeVector c0 = prepare_initial_cluster(params, o.t_ini);
  std::vector<double> times = make_grid(o.t_min, o.t_max, o.t_points, false);
  std::vector<double> k = evolve_k_trace(u, c0, times, o.rtol);
  TimeSeries s;
  s.t = times;
  s.y = k;
  std::ofstream f = out.open("decoherent_growth.csv");
  write_series_csv(f, s);

  std::ofstream sum = out.open("decoherent_growth_summary.csv");
  sum << "quantity,value\n";
  sum << "k_final," << format_double(k.back()) << '\n';
  double kl = std::nan(""), l1 = std::nan("");
  try {
    KlocResult r = k_loc(u);
    kl = r.k_loc;
    l1 = r.lambda1;
  } catch (const Error&) {
    // delocalized regime: no localized cluster size to report
  }
  sum << "k_loc," << format_double(kl) << '\n';
  sum << "lambda1," << format_double(l1) << '\n';
  return 0;
}

inline int cmd_spectrum_scan(const SpectrumScanOptions& o, const GlobalOptions& g,
                             const OutputWriter& out) {
  require(o.gamma1_min >= 0.0 && o.gamma1_max > o.gamma1_min, "spectrum-scan: bad gamma1 range");
  require(o.gamma1_points >= 2, "spectrum-scan: need at least two gamma1 points");
  std::vector<double> gammas(static_cast<std::size_t>(o.gamma1_points));
  for (int i = 0; i < o.gamma1_points; ++i)
    gammas[static_cast<std::size_t>(i)] =
        o.gamma1_min + (o.gamma1_max - o.gamma1_min) * i / (o.gamma1_points - 1);
  std::vector<Eigen::VectorXcd> spectra(gammas.size());
  parallel_for(gammas.size(), g.threads, [&](std::size_t i) {
    LgParams params{o.n, o.d, o.delta, PowerLaw{gammas[i], o.alpha}};
    spectra[i] = upsilon_eigenvalues(build_upsilon(params));
  });
  std::ofstream f = out.open("spectrum_scan.csv");
  f << "gamma1,index,re_lambda,im_lambda\n";
  for (std::size_t i = 0; i < gammas.size(); ++i)
    for (Eigen::Index k = 0; k < spectra[i].size(); ++k)
      f << format_double(gammas[i]) << ',' << k << ',' << format_double(spectra[i](k).real())
        << ',' << format_double(spectra[i](k).imag()) << '\n';

  LgParams params{o.n, o.d, o.delta, PowerLaw{1.0, o.alpha}};
  double hi = o.crit_hi > 0.0 ? o.crit_hi : o.gamma1_max;
  double gc = gamma_crit(params, o.crit_lo, hi);
  std::ofstream sum = out.open("spectrum_summary.csv");
  sum << "quantity,value\n";
  sum << "gamma_crit," << format_double(gc) << '\n';
  return 0;
}

inline int cmd_kloc_scan(const KlocScanOptions& o, const GlobalOptions& g,
                         const OutputWriter& out) {
  require(o.p_min > 0.0 && o.p_max > o.p_min, "kloc-scan: bad p range");
  require(o.p_points >= 2, "kloc-scan: need at least two p points");
  std::vector<double> ps(static_cast<std::size_t>(o.p_points));
  for (int i = 0; i < o.p_points; ++i)
    ps[static_cast<std::size_t>(i)] =
        o.p_min * std::pow(o.p_max / o.p_min, static_cast<double>(i) / (o.p_points - 1));
  ps.front() = o.p_min;
  ps.back() = o.p_max;
  std::vector<double> kloc(ps.size(), std::nan(""));
  std::vector<double> lambda1(ps.size(), std::nan(""));
  parallel_for(ps.size(), g.threads, [&](std::size_t i) {
    AnsatzLaw law{ps[i], o.p_c, o.s, o.nu, o.alpha0, o.alpha_inf, o.scale};
    LgParams params{o.n, o.d, o.delta, law};
    try {
      KlocResult r = k_loc(build_upsilon(params));
      kloc[i] = r.k_loc;
      lambda1[i] = r.lambda1;
    } catch (const Error&) {
      // delocalized points stay nan
    }
  });
  std::ofstream f = out.open("kloc_scan.csv");
  f << "p,k_loc,lambda1\n";
  for (std::size_t i = 0; i < ps.size(); ++i)
    f << format_double(ps[i]) << ',' << format_double(kloc[i]) << ','
      << format_double(lambda1[i]) << '\n';

  std::ofstream fits = out.open("kloc_fit.csv");
  write_fit_header(fits);
  auto branch_fit = [&](const std::string& name, double lo, double hi) {
    std::vector<double> px, ky;
    for (std::size_t i = 0; i < ps.size(); ++i)
      if (std::isfinite(kloc[i])) {
        px.push_back(ps[i]);
        ky.push_back(kloc[i]);
      }
    write_fit_row(fits, name, powerlaw_fit(px, ky, lo, hi));
  };
  branch_fit("kloc_strong", o.fit_lo, o.fit_hi);
  if (o.weak_hi > o.weak_lo && o.weak_lo > 0.0) branch_fit("kloc_weak", o.weak_lo, o.weak_hi);
  return 0;
}

inline int cmd_exact_verify(const ExactVerifyOptions& o, const GlobalOptions& g,
                            const OutputWriter& out) {
  VerifyOptions vo;
  vo.n_max = o.n_max;
  vo.couplings = o.couplings;
  vo.times = o.times;
  vo.t_max = o.t_max;
  vo.d_scale = o.d_scale;
  vo.p_list = o.p_list;
  vo.seed = g.seed;
  vo.inject_l_sign_error = o.inject_l_sign_error;
  std::vector<CheckResult> results = run_verification(vo);
  std::ofstream f = out.open("exact_verify.csv");
  f << "check,status,max_deviation,tolerance\n";
  bool all_pass = true;
  for (const CheckResult& r : results) {
    all_pass = all_pass && r.pass;
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << "  max_dev=" << r.max_deviation
              << "  tol=" << r.tolerance << '\n';
    f << r.name << ',' << (r.pass ? "pass" : "fail") << ',' << format_double(r.max_deviation)
      << ',' << format_double(r.tolerance) << '\n';
  }
  return all_pass ? 0 : 1;
}

inline int cmd_fit(const FitOptions& o, const GlobalOptions& g, const OutputWriter& out) {
  std::ofstream report = out.open("fit_report.csv");
  write_fit_header(report);
  if (o.mode == "files") {
    require(!o.k_file.empty() && !o.fidelity_file.empty(),
            "fit: files mode needs --k-file and --fidelity-file");
    TimeSeries k = ingest_series(o.k_file);
    TimeSeries fid = ingest_series(o.fidelity_file);
    double k_hi = o.k_hi > 0.0 ? o.k_hi : *std::max_element(k.y.begin(), k.y.end());
    write_fit_row(report, "rate_p=" + format_double(o.file_p),
                  fit_decay_vs_k(fid, k, o.k_lo, k_hi));
    return 0;
  }
  require(o.mode == "synthetic", "fit: unknown mode '" + o.mode + "' (synthetic|files)");
  require(!o.p_list.empty(), "fit: empty p list");

  std::vector<double> times = make_grid(0.0, o.t_max, o.t_points, false);
  LgParams ideal_params{o.n, o.d, o.delta, PowerLaw{0.0, 1.0}};
  TimeSeries ideal_k;
  ideal_k.t = times;
  ideal_k.y = evolve_k_trace(build_upsilon(ideal_params), unit_cluster(o.n), times, o.rtol);
  {
    std::ofstream f = out.open("fit_k_ideal.csv");
    write_series_csv(f, ideal_k);
    auto [lo, hi] = growth_window(ideal_k, o.n);
    write_fit_row(report, "growth", powerlaw_fit(ideal_k.t, ideal_k.y, lo, hi));
  }

  double k_hi_default = o.k_hi > 0.0 ? o.k_hi : 0.3 * o.n;
  std::vector<std::string> rows(o.p_list.size());
  std::vector<TimeSeries> k_series(o.p_list.size()), f_series(o.p_list.size());
  parallel_for(o.p_list.size(), g.threads, [&](std::size_t i) {
    double p = o.p_list[i];
    if (p == 0.0) return;
    AnsatzLaw law{p, o.p_c, o.s, o.nu, o.alpha0, o.alpha_inf, o.scale};
    LgParams params{o.n, o.d, o.delta, law};
    TimeSeries k;
    k.t = times;
    k.y = evolve_k_trace(build_upsilon(params), unit_cluster(o.n), times, o.rtol);
    TimeSeries fid = integrate_decay(k, law);
    k_series[i] = k;
    f_series[i] = fid;
  });
  for (std::size_t i = 0; i < o.p_list.size(); ++i) {
    double p = o.p_list[i];
    std::string tag = format_double(p);
    if (p == 0.0) {
      write_null_fit_row(report, "rate_p=0");
      continue;
    }
    std::ofstream fk = out.open("fit_k_p" + tag + ".csv");
    write_series_csv(fk, k_series[i]);
    std::ofstream ff = out.open("fit_fidelity_p" + tag + ".csv");
    write_series_csv(ff, f_series[i]);
    const TimeSeries& abscissa = o.abscissa == "ideal" ? ideal_k : k_series[i];
    require(o.abscissa == "ideal" || o.abscissa == "perturbed",
            "fit: unknown abscissa '" + o.abscissa + "' (ideal|perturbed)");
    write_fit_row(report, "rate_p=" + tag, fit_decay_vs_k(f_series[i], abscissa, o.k_lo, k_hi_default));
  }
  return 0;
}

// ---------------------------------------------------------------------------

//! Digest of the resolved configuration; execution details (output location,
//! thread count) are excluded so reruns elsewhere keep the same stamp.
inline std::uint64_t config_hash(const CLI::App& app) {
  std::istringstream in(app.config_to_str(true, false));
  std::string line, kept;
  while (std::getline(in, line)) {
    if (line.rfind("out-dir", 0) == 0 || line.rfind("threads", 0) == 0) continue;
    kept += line;
    kept += '\n';
  }
  return fnv1a(kept);
}

inline int run(std::vector<std::string> args) {
  CLI::App app{"spin-cluster scrambling toolkit"};
  app.set_version_flag("--version", version_string);
  app.require_subcommand(1);

  GlobalOptions g;
  app.set_config("--config", "", "read options from an INI file");
  app.add_option("--out-dir", g.out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", g.seed, "random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads")->capture_default_str();

  IdealGrowthOptions ig;
  CLI::App* c_ig = app.add_subcommand("ideal-growth", "free cluster growth K(t) across sizes");
  c_ig->add_option("--n-list", ig.n_list, "ladder sizes")->delimiter(',')->capture_default_str();
  c_ig->add_option("--delta", ig.delta, "hopping exponent")->capture_default_str();
  c_ig->add_option("--d", ig.d, "coupling scale (rad/ms)")->capture_default_str();
  c_ig->add_option("--t-min", ig.t_min, "first time (ms)")->capture_default_str();
  c_ig->add_option("--t-max", ig.t_max, "last time (ms)")->capture_default_str();
  c_ig->add_option("--t-points", ig.t_points, "grid points")->capture_default_str();
  c_ig->add_flag("--linear-grid", ig.linear_grid, "use a linear time grid");
  c_ig->add_option("--rtol", ig.rtol, "integrator tolerance")->capture_default_str();

  DecoherentGrowthOptions dg;
  CLI::App* c_dg = app.add_subcommand("decoherent-growth", "cluster growth with decoherence");
  c_dg->add_option("--n", dg.n, "ladder size")->capture_default_str();
  c_dg->add_option("--delta", dg.delta, "hopping exponent")->capture_default_str();
  c_dg->add_option("--d", dg.d, "coupling scale (rad/ms)")->capture_default_str();
  c_dg->add_option("--law", dg.law, "rate law: power|ansatz|custom")->capture_default_str();
  c_dg->add_option("--gamma1", dg.gamma1, "power law: rate at L=1")->capture_default_str();
  c_dg->add_option("--alpha", dg.alpha, "power law: exponent")->capture_default_str();
  c_dg->add_option("--p", dg.p, "ansatz: perturbation strength")->capture_default_str();
  c_dg->add_option("--p-c", dg.p_c, "ansatz: critical perturbation")->capture_default_str();
  c_dg->add_option("--s", dg.s, "ansatz: weak-branch exponent")->capture_default_str();
  c_dg->add_option("--nu", dg.nu, "ansatz: strong-branch exponent")->capture_default_str();
  c_dg->add_option("--alpha0", dg.alpha0, "ansatz: weak-branch K exponent")->capture_default_str();
  c_dg->add_option("--alpha-inf", dg.alpha_inf, "ansatz: strong-branch K exponent")
      ->capture_default_str();
  c_dg->add_option("--scale", dg.scale, "ansatz: overall rate scale")->capture_default_str();
  c_dg->add_option("--rates-file", dg.rates_file, "custom law: rate table CSV (L,gamma_per_ms)");
  c_dg->add_option("--t-ini", dg.t_ini, "free pre-evolution time for the seed")
      ->capture_default_str();
  c_dg->add_option("--t-min", dg.t_min, "first time (ms)")->capture_default_str();
  c_dg->add_option("--t-max", dg.t_max, "last time (ms)")->capture_default_str();
  c_dg->add_option("--t-points", dg.t_points, "grid points")->capture_default_str();
  c_dg->add_option("--rtol", dg.rtol, "integrator tolerance")->capture_default_str();

  SpectrumScanOptions sc;
  CLI::App* c_sc = app.add_subcommand("spectrum-scan", "generator spectra across gamma1");
  c_sc->add_option("--n", sc.n, "ladder size")->capture_default_str();
  c_sc->add_option("--delta", sc.delta, "hopping exponent")->capture_default_str();
  c_sc->add_option("--d", sc.d, "coupling scale (rad/ms)")->capture_default_str();
  c_sc->add_option("--alpha", sc.alpha, "power law exponent")->capture_default_str();
  c_sc->add_option("--gamma1-min", sc.gamma1_min, "scan start")->capture_default_str();
  c_sc->add_option("--gamma1-max", sc.gamma1_max, "scan end")->capture_default_str();
  c_sc->add_option("--gamma1-points", sc.gamma1_points, "scan points")->capture_default_str();
  c_sc->add_option("--crit-lo", sc.crit_lo, "bisection bracket low")->capture_default_str();
  c_sc->add_option("--crit-hi", sc.crit_hi, "bisection bracket high (0: scan end)")
      ->capture_default_str();

  KlocScanOptions kl;
  CLI::App* c_kl = app.add_subcommand("kloc-scan", "localized cluster size across p");
  c_kl->add_option("--n", kl.n, "ladder size")->capture_default_str();
  c_kl->add_option("--delta", kl.delta, "hopping exponent")->capture_default_str();
  c_kl->add_option("--d", kl.d, "coupling scale (rad/ms)")->capture_default_str();
  c_kl->add_option("--p-min", kl.p_min, "scan start")->capture_default_str();
  c_kl->add_option("--p-max", kl.p_max, "scan end")->capture_default_str();
  c_kl->add_option("--p-points", kl.p_points, "scan points (log spaced)")->capture_default_str();
  c_kl->add_option("--p-c", kl.p_c, "ansatz: critical perturbation")->capture_default_str();
  c_kl->add_option("--s", kl.s, "ansatz: weak-branch exponent")->capture_default_str();
  c_kl->add_option("--nu", kl.nu, "ansatz: strong-branch exponent")->capture_default_str();
  c_kl->add_option("--alpha0", kl.alpha0, "ansatz: weak-branch K exponent")->capture_default_str();
  c_kl->add_option("--alpha-inf", kl.alpha_inf, "ansatz: strong-branch K exponent")
      ->capture_default_str();
  c_kl->add_option("--scale", kl.scale, "ansatz: overall rate scale")->capture_default_str();
  c_kl->add_option("--fit-lo", kl.fit_lo, "strong-branch fit window start")->capture_default_str();
  c_kl->add_option("--fit-hi", kl.fit_hi, "strong-branch fit window end")->capture_default_str();
  c_kl->add_option("--weak-lo", kl.weak_lo, "weak-branch fit window start")->capture_default_str();
  c_kl->add_option("--weak-hi", kl.weak_hi, "weak-branch fit window end")->capture_default_str();

  ExactVerifyOptions ev;
  CLI::App* c_ev = app.add_subcommand("exact-verify", "cross-route consistency suite");
  c_ev->add_option("--n-max", ev.n_max, "largest system size")->capture_default_str();
  c_ev->add_option("--couplings", ev.couplings, "coupling draws per size")->capture_default_str();
  c_ev->add_option("--times", ev.times, "times per draw")->capture_default_str();
  c_ev->add_option("--t-max", ev.t_max, "time window (1/d units)")->capture_default_str();
  c_ev->add_option("--d-scale", ev.d_scale, "coupling scale (rad/ms)")->capture_default_str();
  c_ev->add_option("--p-list", ev.p_list, "perturbation strengths")
      ->delimiter(',')
      ->capture_default_str();
  c_ev->add_flag("--inject-l-sign-error", ev.inject_l_sign_error,
                 "flip the pair-sum cross term; the suite must fail");

  FitOptions ft;
  CLI::App* c_ft = app.add_subcommand("fit", "decay-law recovery from series");
  c_ft->add_option("--mode", ft.mode, "synthetic|files")->capture_default_str();
  c_ft->add_option("--n", ft.n, "ladder size (synthetic)")->capture_default_str();
  c_ft->add_option("--delta", ft.delta, "hopping exponent")->capture_default_str();
  c_ft->add_option("--d", ft.d, "coupling scale (rad/ms)")->capture_default_str();
  c_ft->add_option("--p-list", ft.p_list, "perturbation strengths (synthetic)")
      ->delimiter(',')
      ->capture_default_str();
  c_ft->add_option("--p-c", ft.p_c, "ansatz: critical perturbation")->capture_default_str();
  c_ft->add_option("--s", ft.s, "ansatz: weak-branch exponent")->capture_default_str();
  c_ft->add_option("--nu", ft.nu, "ansatz: strong-branch exponent")->capture_default_str();
  c_ft->add_option("--alpha0", ft.alpha0, "ansatz: weak-branch K exponent")->capture_default_str();
  c_ft->add_option("--alpha-inf", ft.alpha_inf, "ansatz: strong-branch K exponent")
      ->capture_default_str();
  c_ft->add_option("--scale", ft.scale, "ansatz: overall rate scale")->capture_default_str();
  c_ft->add_option("--t-max", ft.t_max, "last time (ms)")->capture_default_str();
  c_ft->add_option("--t-points", ft.t_points, "grid points")->capture_default_str();
  c_ft->add_option("--k-lo", ft.k_lo, "fit window start in K")->capture_default_str();
  c_ft->add_option("--k-hi", ft.k_hi, "fit window end in K (0: 0.3 n)")->capture_default_str();
  c_ft->add_option("--abscissa", ft.abscissa, "fit abscissa: perturbed|ideal")
      ->capture_default_str();
  c_ft->add_option("--rtol", ft.rtol, "integrator tolerance")->capture_default_str();
  c_ft->add_option("--k-file", ft.k_file, "files mode: cluster-size series");
  c_ft->add_option("--fidelity-file", ft.fidelity_file, "files mode: fidelity series");
  c_ft->add_option("--p", ft.file_p, "files mode: perturbation label")->capture_default_str();

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    OutputWriter out(g.out_dir, config_hash(app), g.seed);
    if (app.got_subcommand(c_ig)) return cmd_ideal_growth(ig, g, out);
    if (app.got_subcommand(c_dg)) return cmd_decoherent_growth(dg, g, out);
    if (app.got_subcommand(c_sc)) return cmd_spectrum_scan(sc, g, out);
    if (app.got_subcommand(c_kl)) return cmd_kloc_scan(kl, g, out);
    if (app.got_subcommand(c_ev)) return cmd_exact_verify(ev, g, out);
    if (app.got_subcommand(c_ft)) return cmd_fit(ft, g, out);
    throw Error("no subcommand selected");
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
}

inline int run(int argc, char** argv) {
  std::vector<std::string> args;
  args.reserve(static_cast<std::size_t>(argc > 0 ? argc - 1 : 0));
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(std::move(args));
}

}  // namespace scramble::cli
