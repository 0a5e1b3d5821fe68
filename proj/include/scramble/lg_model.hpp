#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "scramble/core.hpp"
#include "scramble/rate_laws.hpp"

namespace scramble {

//! Cap for dense spectral work on the level-space generator.
inline constexpr int dense_eigen_max = 4096;

//! Level-space model of cluster growth: amplitudes C_L on the cluster-size
//! ladder L = 1..n obey dC/dt = -Upsilon C with
//!   Upsilon = diag(Gamma_L) + (i/4) * tridiag(W_L),  W_L = d L^delta.
struct LgParams {
  int n = 0;
  double d = 1.0;       // ladder coupling scale, rad/ms
  double delta = 0.66;  // hopping growth exponent
  RateLaw rate_law = PowerLaw{};

  void validate() const {
    require(n >= 1, "LgParams: n must be at least 1");
    require(d > 0.0, "LgParams: d must be positive");
    require(delta >= 0.0 && delta <= 1.0, "LgParams: delta must lie in [0, 1]");
  }
};

//! W_L = d L^delta for L = 1..n-1.
inline std::vector<double> transition_rates(const LgParams& p) {
  p.validate();
  std::vector<double> w(static_cast<std::size_t>(p.n > 0 ? p.n - 1 : 0));
  for (int l = 1; l < p.n; ++l)
    w[static_cast<std::size_t>(l - 1)] = p.d * std::pow(static_cast<double>(l), p.delta);
  return w;
}

//! Gamma_L for L = 1..n from the configured rate law.
inline std::vector<double> decoherence_rates(const LgParams& p) {
  p.validate();
  std::vector<double> g(static_cast<std::size_t>(p.n));
  if (const auto* pw = std::get_if<PowerLaw>(&p.rate_law)) {
    require(pw->gamma1 >= 0.0, "decoherence_rates: gamma1 must be nonnegative");
    for (int l = 1; l <= p.n; ++l)
      g[static_cast<std::size_t>(l - 1)] = pw->gamma1 * std::pow(static_cast<double>(l), pw->alpha);
  } else if (const auto* an = std::get_if<AnsatzLaw>(&p.rate_law)) {
    for (int l = 1; l <= p.n; ++l)
      g[static_cast<std::size_t>(l - 1)] = ansatz_rate(*an, static_cast<double>(l));
  } else {
    const auto& cu = std::get<CustomLaw>(p.rate_law);
    require(static_cast<int>(cu.rates.size()) == p.n,
            "decoherence_rates: custom rate table length differs from n");
    g = cu.rates;
  }
  for (double x : g) require(x >= 0.0, "decoherence_rates: rates must be nonnegative");
  return g;
}

using AmplitudeVector = Eigen::VectorXcd;

//! Tridiagonal non-Hermitian generator; only the two defining vectors are
//! stored, all dense work goes through the real similarity transform
//! A = S^-1 Upsilon S with S = diag(i^L), which has diagonal Gamma_L,
//! superdiagonal -W_L/4 and subdiagonal +W_L/4.
class UpsilonMatrix {
 public:
  UpsilonMatrix(std::vector<double> w, std::vector<double> gamma)
      : w_(std::move(w)), gamma_(std::move(gamma)) {
    require(!gamma_.empty(), "UpsilonMatrix: empty diagonal");
    require(w_.size() + 1 == gamma_.size(), "UpsilonMatrix: need n-1 hopping rates for n levels");
    for (double x : gamma_) require(x >= 0.0, "UpsilonMatrix: decoherence rates must be nonnegative");
  }

  int size() const { return static_cast<int>(gamma_.size()); }
  double gamma(int l) const { return gamma_[static_cast<std::size_t>(l)]; }
  double w(int l) const { return w_[static_cast<std::size_t>(l)]; }
  const std::vector<double>& gammas() const { return gamma_; }
  const std::vector<double>& ws() const { return w_; }

  //! out = Upsilon * in.
  void apply(const AmplitudeVector& in, AmplitudeVector& out) const {
    int n = size();
    out.resize(n);
    const Complex i4(0.0, 0.25);
    for (int l = 0; l < n; ++l) {
      Complex acc = gamma_[static_cast<std::size_t>(l)] * in(l);
      if (l > 0) acc += i4 * w_[static_cast<std::size_t>(l - 1)] * in(l - 1);
      if (l + 1 < n) acc += i4 * w_[static_cast<std::size_t>(l)] * in(l + 1);
      out(l) = acc;
    }
  }

  //! Max row sum, an upper bound for the operator norm.
  double norm_bound() const {
    double best = 0.0;
    int n = size();
    for (int l = 0; l < n; ++l) {
      double row = gamma_[static_cast<std::size_t>(l)];
      if (l > 0) row += 0.25 * w_[static_cast<std::size_t>(l - 1)];
      if (l + 1 < n) row += 0.25 * w_[static_cast<std::size_t>(l)];
      best = std::max(best, row);
    }
    return best;
  }

  //! Dense real similarity transform (see class comment).
  Eigen::MatrixXd real_similarity() const {
    int n = size();
    require(n <= dense_eigen_max,
            "UpsilonMatrix: dense spectral path capped at n = " + std::to_string(dense_eigen_max));
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int l = 0; l < n; ++l) {
      a(l, l) = gamma_[static_cast<std::size_t>(l)];
      if (l + 1 < n) {
        a(l, l + 1) = -0.25 * w_[static_cast<std::size_t>(l)];
        a(l + 1, l) = 0.25 * w_[static_cast<std::size_t>(l)];
      }
    }
    return a;
  }

 private:
  std::vector<double> w_;
  std::vector<double> gamma_;
};

inline UpsilonMatrix build_upsilon(const LgParams& p) {
  return UpsilonMatrix(transition_rates(p), decoherence_rates(p));
}

//! Amplitude vector seeded at L = 1.
inline AmplitudeVector unit_cluster(int n) {
  require(n >= 1, "unit_cluster: n must be at least 1");
  AmplitudeVector c = AmplitudeVector::Zero(n);
  c(0) = 1.0;
  return c;
}

//! Average cluster size sum_L L |C_L|^2 / sum_L |C_L|^2.
inline double k_of_t(const AmplitudeVector& c) {
  double norm2 = 0.0, weighted = 0.0;
  for (Eigen::Index l = 0; l < c.size(); ++l) {
    double a2 = std::norm(c(l));
    norm2 += a2;
    weighted += static_cast<double>(l + 1) * a2;
  }
  require(norm2 > 1e-300, "k_of_t: amplitude norm vanished");
  return weighted / norm2;
}

namespace detail {

//! Dormand-Prince 5(4) step on dy/dt = -Upsilon y.  The error norm is
//! relative to the vector sup norm, so uniformly rescaled trajectories step
//! identically.
class Dopri5 {
 public:
  Dopri5(const UpsilonMatrix& u, double rtol) : u_(u), rtol_(rtol) {
    require(rtol > 0.0 && rtol < 1.0, "evolve_amplitudes: rtol must lie in (0, 1)");
  }

  //! Advances y from t exactly to t_target.
  void advance(AmplitudeVector& y, double& t, double t_target) {
    while (t < t_target) {
      if (h_ <= 0.0) h_ = initial_step(y);
      double h = std::min(h_, t_target - t);
      bool clipped = h < h_;
      double err = attempt(y, h);
      if (err <= 1.0) {
        t = (h == t_target - t) ? t_target : t + h;
        y.swap(ynew_);
        if (!clipped) h_ = h * std::clamp(0.9 * std::pow(err > 0 ? err : 1e-10, -0.2), 0.2, 5.0);
      } else {
        double shrunk = h * std::max(0.2, 0.9 * std::pow(err, -0.2));
        require(shrunk >= 1e-14 * std::max(1.0, std::abs(t)),
                "evolve_amplitudes: step size underflow at t = " + format_double(t));
        h_ = shrunk;
      }
    }
  }

 private:
  double initial_step(const AmplitudeVector& y) {
    double nb = u_.norm_bound();
    (void)y;
    return nb > 0.0 ? 0.1 / nb : 1.0;
  }

  void deriv(const AmplitudeVector& y, AmplitudeVector& dy) {
    u_.apply(y, dy);
    dy = -dy;
  }

  //! One trial step of size h; fills ynew_, returns scaled error.
  double attempt(const AmplitudeVector& y, double h) {
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                            e4 = 125.0 / 192 - 393.0 / 640,
                            e5 = -2187.0 / 6784 + 92097.0 / 339200, e6 = 11.0 / 84 - 187.0 / 2100,
                            e7 = -1.0 / 40;
    deriv(y, k1_);
    ynew_ = y + h * a21 * k1_;
    deriv(ynew_, k2_);
    ynew_ = y + h * (a31 * k1_ + a32 * k2_);
    deriv(ynew_, k3_);
    ynew_ = y + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
    deriv(ynew_, k4_);
    ynew_ = y + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
    deriv(ynew_, k5_);
    ynew_ = y + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
    deriv(ynew_, k6_);
    ynew_ = y + h * (b1 * k1_ + b3 * k3_ + b4 * k4_ + b5 * k5_ + b6 * k6_);
    deriv(ynew_, k7_);
    double emax = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      Complex e = h * (e1 * k1_(i) + e3 * k3_(i) + e4 * k4_(i) + e5 * k5_(i) + e6 * k6_(i) +
                       e7 * k7_(i));
      emax = std::max(emax, std::abs(e));
    }
    double scale = rtol_ * std::max({y.cwiseAbs().maxCoeff(), ynew_.cwiseAbs().maxCoeff(), 1e-300});
    return emax / scale;
  }

  const UpsilonMatrix& u_;
  double rtol_;
  double h_ = 0.0;
  AmplitudeVector ynew_, k1_, k2_, k3_, k4_, k5_, k6_, k7_;
};

}  // namespace detail

//! Integrates dC/dt = -Upsilon C from C(0) = c0, reporting the amplitudes at
//! the requested times (nondecreasing, starting at or after 0).
inline std::vector<AmplitudeVector> evolve_amplitudes(const UpsilonMatrix& u,
                                                      const AmplitudeVector& c0,
                                                      std::span<const double> times,
                                                      double rtol = 1e-10) {
  require(c0.size() == u.size(), "evolve_amplitudes: initial vector length differs from n");
  require(!times.empty(), "evolve_amplitudes: empty time grid");
  require(times[0] >= 0.0, "evolve_amplitudes: times must be nonnegative");
  for (std::size_t i = 1; i < times.size(); ++i)
    require(times[i] >= times[i - 1], "evolve_amplitudes: times must be nondecreasing");
  detail::Dopri5 stepper(u, rtol);
  AmplitudeVector y = c0;
  double t = 0.0;
  std::vector<AmplitudeVector> out;
  out.reserve(times.size());
  for (double target : times) {
    stepper.advance(y, t, target);
    out.push_back(y);
  }
  return out;
}

//! Same integration, but reports K(t) only; memory stays O(n).
inline std::vector<double> evolve_k_trace(const UpsilonMatrix& u, const AmplitudeVector& c0,
                                          std::span<const double> times, double rtol = 1e-10) {
  require(c0.size() == u.size(), "evolve_k_trace: initial vector length differs from n");
  require(!times.empty(), "evolve_k_trace: empty time grid");
  require(times[0] >= 0.0, "evolve_k_trace: times must be nonnegative");
  for (std::size_t i = 1; i < times.size(); ++i)
    require(times[i] >= times[i - 1], "evolve_k_trace: times must be nondecreasing");
  detail::Dopri5 stepper(u, rtol);
  AmplitudeVector y = c0;
  double t = 0.0;
  std::vector<double> out;
  out.reserve(times.size());
  for (double target : times) {
    stepper.advance(y, t, target);
    out.push_back(k_of_t(y));
  }
  return out;
}

//! Spectral solution of the dense generator, eigenpairs sorted by ascending
//! real part (ties by imaginary part).
struct EigenSolution {
  Eigen::VectorXcd lambdas;
  Eigen::MatrixXcd vectors;          // columns, unit norm
  Eigen::VectorXcd initial_weights;  // expansion of c0 over the columns

  //! C(t) = V diag(exp(-lambda t)) weights.
  AmplitudeVector amplitude_at(double t) const {
    Eigen::VectorXcd ph(lambdas.size());
    for (Eigen::Index i = 0; i < lambdas.size(); ++i)
      ph(i) = std::exp(-lambdas(i) * t) * initial_weights(i);
    return vectors * ph;
  }
};

namespace detail {

inline std::vector<int> spectral_order(const Eigen::VectorXcd& lambdas) {
  std::vector<int> idx(static_cast<std::size_t>(lambdas.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (lambdas(a).real() != lambdas(b).real()) return lambdas(a).real() < lambdas(b).real();
    return lambdas(a).imag() < lambdas(b).imag();
  });
  return idx;
}

}  // namespace detail

//! Full dense eigensolve via the real similarity transform; eigenvectors are
//! mapped back by the i^L phase diagonal.
inline EigenSolution eigensolve(const UpsilonMatrix& u, const AmplitudeVector& c0) {
  int n = u.size();
  require(c0.size() == n, "eigensolve: initial vector length differs from n");
  Eigen::MatrixXd a = u.real_similarity();
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, true);
  require(es.info() == Eigen::Success, "eigensolve: QR iteration failed");
  Eigen::VectorXcd lam = es.eigenvalues();
  Eigen::MatrixXcd vec = es.eigenvectors();
  // phases i^L down each column undo the similarity transform
  Complex ph(1.0, 0.0);
  const Complex i_unit(0.0, 1.0);
  for (int l = 0; l < n; ++l) {
    vec.row(l) *= ph;
    ph *= i_unit;
  }
  std::vector<int> order = detail::spectral_order(lam);
  EigenSolution sol;
  sol.lambdas.resize(n);
  sol.vectors.resize(n, n);
  for (int i = 0; i < n; ++i) {
    sol.lambdas(i) = lam(order[static_cast<std::size_t>(i)]);
    sol.vectors.col(i) = vec.col(order[static_cast<std::size_t>(i)]);
  }
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(sol.vectors);
  sol.initial_weights = lu.solve(c0);
  double resid = (sol.vectors * sol.initial_weights - c0).norm();
  require(resid <= 1e-8 * std::max(1.0, c0.norm()),
          "eigensolve: eigenbasis is near defective, cannot expand initial state");
  return sol;
}

inline EigenSolution eigensolve(const UpsilonMatrix& u) { return eigensolve(u, unit_cluster(u.size())); }

//! Eigenvalues only, sorted as in eigensolve.  The real similarity transform
//! is already Hessenberg, so the reduction step is skipped.
inline Eigen::VectorXcd upsilon_eigenvalues(const UpsilonMatrix& u) {
  int n = u.size();
  Eigen::MatrixXd a = u.real_similarity();
  Eigen::RealSchur<Eigen::MatrixXd> schur(n);
  schur.computeFromHessenberg(a, a, false);
  require(schur.info() == Eigen::Success, "upsilon_eigenvalues: Schur iteration failed");
  const Eigen::MatrixXd& tmat = schur.matrixT();
  Eigen::VectorXcd lam(n);
  int i = 0;
  while (i < n) {
    if (i == n - 1 || tmat(i + 1, i) == 0.0) {
      lam(i) = Complex(tmat(i, i), 0.0);
      ++i;
    } else {
      double p = 0.5 * (tmat(i, i) - tmat(i + 1, i + 1));
      double z = std::sqrt(std::abs(p * p + tmat(i + 1, i) * tmat(i, i + 1)));
      lam(i) = Complex(tmat(i + 1, i + 1) + p, z);
      lam(i + 1) = Complex(tmat(i + 1, i + 1) + p, -z);
      i += 2;
    }
  }
  std::vector<int> order = detail::spectral_order(lam);
  Eigen::VectorXcd sorted(n);
  for (int k = 0; k < n; ++k) sorted(k) = lam(order[static_cast<std::size_t>(k)]);
  return sorted;
}

namespace detail {

//! Solves (A - sigma I) x = rhs for the real similarity matrix, tridiagonal
//! LU with partial pivoting; near-singular pivots are nudged, which is the
//! standard inverse-iteration treatment.
inline void shifted_tridiag_solve(const UpsilonMatrix& u, double sigma, std::vector<double>& x) {
  int n = u.size();
  std::vector<double> diag(static_cast<std::size_t>(n));
  std::vector<double> sup(static_cast<std::size_t>(n > 0 ? n - 1 : 0));
  std::vector<double> sub(static_cast<std::size_t>(n > 0 ? n - 1 : 0));
  std::vector<double> sup2(static_cast<std::size_t>(n > 1 ? n - 2 : 0), 0.0);
  for (int l = 0; l < n; ++l) diag[static_cast<std::size_t>(l)] = u.gamma(l) - sigma;
  for (int l = 0; l + 1 < n; ++l) {
    sup[static_cast<std::size_t>(l)] = -0.25 * u.w(l);
    sub[static_cast<std::size_t>(l)] = 0.25 * u.w(l);
  }
  double scale = std::max(u.norm_bound() + std::abs(sigma), 1e-300);
  double tiny = 1e-300 + 1e-20 * scale;
  for (int l = 0; l + 1 < n; ++l) {
    std::size_t sl = static_cast<std::size_t>(l);
    if (std::abs(sub[sl]) > std::abs(diag[sl])) {
      // swap rows l and l+1
      std::swap(diag[sl], sub[sl]);
      double t = sup[sl];
      sup[sl] = diag[sl + 1];
      diag[sl + 1] = t;
      if (l + 2 < n) {
        sup2[sl] = sup[sl + 1];
        sup[sl + 1] = 0.0;
      }
      std::swap(x[sl], x[sl + 1]);
    }
    if (std::abs(diag[sl]) < tiny) diag[sl] = diag[sl] < 0 ? -tiny : tiny;
    double m = sub[sl] / diag[sl];
    diag[sl + 1] -= m * sup[sl];
    if (l + 2 < n) sup[sl + 1] -= m * sup2[sl];
    x[sl + 1] -= m * x[sl];
  }
  std::size_t last = static_cast<std::size_t>(n - 1);
  if (std::abs(diag[last]) < tiny) diag[last] = diag[last] < 0 ? -tiny : tiny;
  for (int l = n - 1; l >= 0; --l) {
    std::size_t sl = static_cast<std::size_t>(l);
    double acc = x[sl];
    if (l + 1 < n) acc -= sup[sl] * x[sl + 1];
    if (l + 2 < n) acc -= sup2[sl] * x[sl + 2];
    x[sl] = acc / diag[sl];
  }
}

inline double rayleigh_quotient(const UpsilonMatrix& u, const std::vector<double>& x) {
  int n = u.size();
  double num = 0.0, den = 0.0;
  for (int l = 0; l < n; ++l) {
    std::size_t sl = static_cast<std::size_t>(l);
    double ax = u.gamma(l) * x[sl];
    if (l > 0) ax += 0.25 * u.w(l - 1) * x[sl - 1];
    if (l + 1 < n) ax += -0.25 * u.w(l) * x[sl + 1];
    num += x[sl] * ax;
    den += x[sl] * x[sl];
  }
  return num / den;
}

inline double residual_inf(const UpsilonMatrix& u, const std::vector<double>& x, double lambda) {
  int n = u.size();
  double worst = 0.0;
  for (int l = 0; l < n; ++l) {
    std::size_t sl = static_cast<std::size_t>(l);
    double ax = u.gamma(l) * x[sl];
    if (l > 0) ax += 0.25 * u.w(l - 1) * x[sl - 1];
    if (l + 1 < n) ax += -0.25 * u.w(l) * x[sl + 1];
    worst = std::max(worst, std::abs(ax - lambda * x[sl]));
  }
  return worst;
}

}  // namespace detail

struct KlocResult {
  double k_loc = 0.0;
  double lambda1 = 0.0;
  int sweeps = 0;
};

//! Localized cluster size from the leftmost eigenvector: shifted inverse
//! iteration in real arithmetic (|C_L| is phase-free under the similarity
//! transform).  Shift starts at 0 and switches to Rayleigh updates after the
//! second sweep.  Fails when the leftmost eigenvalue is not an isolated real
//! point (delocalized regime).
inline KlocResult k_loc(const UpsilonMatrix& u, int max_sweeps = 500) {
  int n = u.size();
  double gmax = *std::max_element(u.gammas().begin(), u.gammas().end());
  require(gmax > 0.0, "k_loc: all decoherence rates vanish, the free ladder never localizes");
  std::vector<double> x(static_cast<std::size_t>(n), 0.0);
  x[0] = 1.0;
  double sigma = 0.0;
  double lambda = 0.0;
  bool have_lambda = false;
  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    detail::shifted_tridiag_solve(u, sigma, x);
    double norm = 0.0;
    for (double v : x) norm += v * v;
    norm = std::sqrt(norm);
    require(norm > 0.0 && std::isfinite(norm), "k_loc: inverse iteration broke down");
    for (double& v : x) v /= norm;
    double next = detail::rayleigh_quotient(u, x);
    if (have_lambda && std::abs(next - lambda) <= 1e-12 * std::max(std::abs(next), 1e-300)) {
      lambda = next;
      ++sweep;
      break;
    }
    lambda = next;
    have_lambda = true;
    if (sweep >= 1) sigma = lambda;
  }
  require(sweep < max_sweeps,
          "k_loc: iteration stagnated; leftmost eigenvalue is likely complex (delocalized regime)");
  require(detail::residual_inf(u, x, lambda) <= 1e-8 * std::max(u.norm_bound(), 1.0),
          "k_loc: converged shift is not an eigenvalue of the generator");
  double num = 0.0, den = 0.0;
  for (int l = 0; l < n; ++l) {
    double a2 = x[static_cast<std::size_t>(l)] * x[static_cast<std::size_t>(l)];
    num += static_cast<double>(l + 1) * a2;
    den += a2;
  }
  KlocResult res;
  res.k_loc = num / den;
  res.lambda1 = lambda;
  res.sweeps = sweep;
  return res;
}

//! True when the leftmost part of the spectrum is a single real eigenvalue:
//! every eigenvalue whose real part ties the minimum (within 1e-9 of the
//! norm scale) must have |Im| below 1e-10 of the norm scale.
inline bool spectrum_localized(const UpsilonMatrix& u) {
  Eigen::VectorXcd lam = upsilon_eigenvalues(u);
  double scale = std::max(u.norm_bound(), 1e-300);
  double re_min = lam(0).real();
  double tie = 1e-9 * scale;
  double tol_im = 1e-10 * scale;
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    if (lam(i).real() <= re_min + tie && std::abs(lam(i).imag()) > tol_im) return false;
  return true;
}

namespace detail {

inline UpsilonMatrix scaled_upsilon(const LgParams& p, double magnitude) {
  LgParams q = p;
  if (const auto* pw = std::get_if<PowerLaw>(&q.rate_law)) {
    q.rate_law = PowerLaw{magnitude, pw->alpha};
  } else if (const auto* an = std::get_if<AnsatzLaw>(&q.rate_law)) {
    AnsatzLaw a = *an;
    a.scale = magnitude;
    q.rate_law = a;
  } else {
    CustomLaw cu = std::get<CustomLaw>(q.rate_law);
    for (double& r : cu.rates) r *= magnitude;
    q.rate_law = cu;
  }
  return build_upsilon(q);
}

}  // namespace detail

//! Critical decoherence magnitude: bisects the law's magnitude knob (gamma1
//! for the power law, scale for the critical form, a plain multiplier for
//! custom tables) between a delocalized lo and a localized hi, to 1e-3
//! relative width.  The localization predicate is spectrum_localized.
inline double gamma_crit(const LgParams& p, double bracket_lo, double bracket_hi) {
  p.validate();
  require(bracket_lo >= 0.0 && bracket_hi > bracket_lo, "gamma_crit: invalid bracket order");
  bool lo_loc = spectrum_localized(detail::scaled_upsilon(p, bracket_lo));
  bool hi_loc = spectrum_localized(detail::scaled_upsilon(p, bracket_hi));
  require(!lo_loc, "gamma_crit: lower bracket end is already localized");
  require(hi_loc, "gamma_crit: upper bracket end is not localized");
  double lo = bracket_lo, hi = bracket_hi;
  while (hi - lo > 1e-3 * std::max({std::abs(hi), std::abs(lo), 1e-300})) {
    double mid = 0.5 * (lo + hi);
    if (spectrum_localized(detail::scaled_upsilon(p, mid)))
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

//! Broadened initial condition: the free ladder (Gamma = 0) evolved from the
//! unit cluster for t_ini, then renormalized.
inline AmplitudeVector prepare_initial_cluster(const LgParams& p, double t_ini) {
  p.validate();
  require(t_ini >= 0.0, "prepare_initial_cluster: t_ini must be nonnegative");
  AmplitudeVector c0 = unit_cluster(p.n);
  if (t_ini == 0.0) return c0;
  UpsilonMatrix free_ladder(transition_rates(p),
                            std::vector<double>(static_cast<std::size_t>(p.n), 0.0));
  std::array<double, 1> grid{t_ini};
  AmplitudeVector c = evolve_amplitudes(free_ladder, c0, grid).back();
  c /= c.norm();
  return c;
}

}  // namespace scramble
