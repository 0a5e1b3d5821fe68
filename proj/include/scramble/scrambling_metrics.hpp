#pragma once

#include <cmath>
#include <map>
#include <numbers>
#include <ostream>
#include <span>
#include <vector>

#include "scramble/core.hpp"
#include "scramble/exact_engine.hpp"

namespace scramble {

//! Multiple-quantum coherence amplitudes f_M, M in -n..n, normalized by
//! Tr(Iz^2).  The element (r, c) of an operator carries order
//! M(r, c) = m(r) - m(c); conjugation by exp(-i phi Iz) tags it with
//! exp(-i M phi).
struct MqcSpectrum {
  int n_spins = 0;
  double iz_norm2 = 0.0;
  std::vector<Complex> amplitudes;  // index M + n_spins

  Complex amplitude(int m) const {
    require(m >= -n_spins && m <= n_spins, "MqcSpectrum::amplitude: order out of range");
    return amplitudes[static_cast<std::size_t>(m + n_spins)];
  }

  Complex fidelity_sum() const {
    Complex s(0.0);
    for (const Complex& f : amplitudes) s += f;
    return s;
  }

  Complex second_moment() const {
    Complex s(0.0);
    for (int m = -n_spins; m <= n_spins; ++m)
      s += static_cast<double>(m) * static_cast<double>(m) * amplitude(m);
    return s;
  }
};

//! Sampled echo signal at fixed evolution time over a phase grid.
struct EchoTrace {
  int n_spins = 0;
  double t = 0.0;
  std::vector<double> phis;
  std::vector<Complex> signal;
};

//! Splits obs into coherence blocks; block M keeps exactly the elements with
//! m(r) - m(c) = M, all 2n+1 orders are returned.
inline std::map<int, DenseOperator> coherence_decompose(const DenseOperator& obs) {
  int n = detail::dim_to_spins(obs.rows(), "coherence_decompose");
  require(obs.rows() == obs.cols(), "coherence_decompose: operator must be square");
  std::uint32_t dim = 1u << n;
  std::map<int, DenseOperator> blocks;
  for (int m = -n; m <= n; ++m) blocks.emplace(m, DenseOperator::Zero(dim, dim));
  for (std::uint32_t r = 0; r < dim; ++r)
    for (std::uint32_t c = 0; c < dim; ++c) {
      int m = std::popcount(c) - std::popcount(r);
      blocks[m](r, c) = obs(r, c);
    }
  return blocks;
}

//! f_M = Tr(A_M B_M^dag) / Tr(Iz^2) accumulated entrywise from the coherence
//! masks of the ideal (A) and perturbed (B) evolved observables.
inline MqcSpectrum mqc_spectrum(const DenseOperator& ideal, const DenseOperator& perturbed) {
  int n = detail::dim_to_spins(ideal.rows(), "mqc_spectrum");
  require(ideal.rows() == ideal.cols() && perturbed.rows() == perturbed.cols() &&
              ideal.rows() == perturbed.rows(),
          "mqc_spectrum: operator dimensions differ");
  std::uint32_t dim = 1u << n;
  MqcSpectrum spec;
  spec.n_spins = n;
  spec.iz_norm2 = collective_z_norm2(n);
  spec.amplitudes.assign(static_cast<std::size_t>(2 * n + 1), Complex(0.0));
  for (std::uint32_t r = 0; r < dim; ++r)
    for (std::uint32_t c = 0; c < dim; ++c) {
      int m = std::popcount(c) - std::popcount(r);
      spec.amplitudes[static_cast<std::size_t>(m + n)] +=
          ideal(r, c) * std::conj(perturbed(r, c));
    }
  for (Complex& f : spec.amplitudes) f /= spec.iz_norm2;
  return spec;
}

inline double echo_fidelity(const MqcSpectrum& spec) {
  Complex s = spec.fidelity_sum();
  require(std::abs(s) >= 1e-12, "echo fidelity vanishes; cluster size undefined");
  return s.real();
}

//! K = sum_M M^2 f_M / sum_M f_M.  Imaginary residue of the sums is
//! discarded; reality is enforced separately by the protocol checks.
inline double cluster_size(const MqcSpectrum& spec) {
  double fidelity = echo_fidelity(spec);
  return spec.second_moment().real() / fidelity;
}

//! Perturbed echo on n spins: ideal generator is the double-quantum
//! Hamiltonian of the couplings, the forward generator interpolates toward
//! sigma (default: the secular dipolar Hamiltonian of the same couplings).
class EchoExperiment {
 public:
  EchoExperiment(const CouplingMatrix& c, double p)
      : EchoExperiment(c, p, build_dipolar(c)) {}

  EchoExperiment(const CouplingMatrix& c, double p, const DenseOperator& sigma)
      : n_(c.spins()),
        p_(p),
        iz_(collective_z(n_)),
        ideal_(build_double_quantum(c)),
        forward_(build_forward(build_double_quantum(c), sigma, p)) {}

  int spins() const { return n_; }
  double p() const { return p_; }

  //! Iz evolved under the ideal generator: U0(t) Iz U0(t)^dag.
  DenseOperator ideal_evolved(double t) const { return ideal_.evolve(iz_, t); }

  //! Iz evolved under the forward generator.
  DenseOperator perturbed_evolved(double t) const { return forward_.evolve(iz_, t); }

  //! Literal protocol value Tr[A(t) phi_z B(t) phi_z^dag] / Tr(Iz^2).
  Complex signal(double t, double phi) const {
    return signal(ideal_evolved(t), perturbed_evolved(t), phi);
  }

  Complex signal(const DenseOperator& ideal, const DenseOperator& perturbed, double phi) const {
    DenseOperator rot = phase_rotation(n_, phi);
    DenseOperator tagged = rot * perturbed * rot.adjoint();
    Complex tr = (ideal.transpose().cwiseProduct(tagged)).sum();
    return tr / collective_z_norm2(n_);
  }

  EchoTrace trace(double t, std::span<const double> phis) const {
    DenseOperator a = ideal_evolved(t);
    DenseOperator b = perturbed_evolved(t);
    EchoTrace out;
    out.n_spins = n_;
    out.t = t;
    out.phis.assign(phis.begin(), phis.end());
    out.signal.reserve(phis.size());
    for (double phi : phis) out.signal.push_back(signal(a, b, phi));
    return out;
  }

  MqcSpectrum spectrum(double t) const {
    return mqc_spectrum(ideal_evolved(t), perturbed_evolved(t));
  }

 private:
  int n_;
  double p_;
  DenseOperator iz_;
  Evolver ideal_;
  Evolver forward_;
};

inline Complex echo_signal(const CouplingMatrix& c, double p, double t, double phi) {
  return EchoExperiment(c, p).signal(t, phi);
}

//! Default phase grid: 2n+2 uniform points on [0, 2pi), the minimum that
//! resolves every order without aliasing.
inline std::vector<double> default_phi_grid(int n_spins) {
  int p = 2 * n_spins + 2;
  std::vector<double> phis(static_cast<std::size_t>(p));
  for (int k = 0; k < p; ++k)
    phis[static_cast<std::size_t>(k)] = 2.0 * std::numbers::pi * k / p;
  return phis;
}

//! Discrete Fourier extraction f_M = (1/P) sum_k s(phi_k) exp(-i M phi_k).
//! Requires a uniform grid of at least 2n+2 points spanning [0, 2pi).
inline MqcSpectrum fourier_extract(const EchoTrace& trace) {
  int n = trace.n_spins;
  require(n >= 1, "fourier_extract: trace carries no spin count");
  std::size_t p = trace.phis.size();
  require(trace.signal.size() == p, "fourier_extract: phi and signal lengths differ");
  require(p >= static_cast<std::size_t>(2 * n + 2),
          "fourier_extract: phi grid too coarse, orders would alias (need at least 2n+2 points)");
  double dphi = 2.0 * std::numbers::pi / static_cast<double>(p);
  for (std::size_t k = 0; k < p; ++k)
    require(std::abs(trace.phis[k] - trace.phis[0] - static_cast<double>(k) * dphi) <= 1e-9,
            "fourier_extract: phi grid must be uniform over [0, 2pi)");
  MqcSpectrum spec;
  spec.n_spins = n;
  spec.iz_norm2 = collective_z_norm2(n);
  spec.amplitudes.assign(static_cast<std::size_t>(2 * n + 1), Complex(0.0));
  for (int m = -n; m <= n; ++m) {
    Complex acc(0.0);
    for (std::size_t k = 0; k < p; ++k)
      acc += trace.signal[k] * std::exp(Complex(0.0, -m * trace.phis[k]));
    spec.amplitudes[static_cast<std::size_t>(m + n)] = acc / static_cast<double>(p);
  }
  return spec;
}

//! Tr{[Iz, a][Iz, b]^dag} / Tr(Iz^2) via explicit commutators.
inline double oto_commutator(const DenseOperator& a, const DenseOperator& b) {
  int n = detail::dim_to_spins(a.rows(), "oto_commutator");
  require(a.rows() == a.cols() && b.rows() == b.cols() && a.rows() == b.rows(),
          "oto_commutator: operator dimensions differ");
  DenseOperator iz = collective_z(n);
  DenseOperator ca = iz * a - a * iz;
  DenseOperator cb = iz * b - b * iz;
  Complex tr = (ca.cwiseProduct(cb.conjugate())).sum();
  return tr.real() / collective_z_norm2(n);
}

//! General out-of-time-order correlator
//!   F(t) = Tr(A(t)^dag b^dag A(t) b) / (|a|_F |b|_F),  A(t) = U a U^dag.
inline Complex otoc_general(const DenseOperator& a, const DenseOperator& b,
                            const DenseOperator& h, double t) {
  require(a.rows() == a.cols() && b.rows() == b.cols() && a.rows() == b.rows() &&
              h.rows() == a.rows() && h.rows() == h.cols(),
          "otoc_general: operator dimensions differ");
  double na = a.norm();
  double nb = b.norm();
  require(na > 0.0 && nb > 0.0, "otoc_general: zero-norm observable");
  DenseOperator at = evolve(h, a, t);
  return (at.adjoint() * b.adjoint() * at * b).trace() / (na * nb);
}

struct KTraceRow {
  double t_ms = 0.0;
  double k = 0.0;
  double fidelity = 0.0;
};

inline void write_spectrum_csv(std::ostream& out, const MqcSpectrum& spec) {
  out << "M,re_f,im_f\n";
  for (int m = -spec.n_spins; m <= spec.n_spins; ++m) {
    Complex f = spec.amplitude(m);
    out << m << ',' << format_double(f.real()) << ',' << format_double(f.imag()) << '\n';
  }
}

inline void write_ktrace_csv(std::ostream& out, std::span<const KTraceRow> rows) {
  out << "t_ms,cluster_size,fidelity\n";
  for (const KTraceRow& r : rows)
    out << format_double(r.t_ms) << ',' << format_double(r.k) << ','
        << format_double(r.fidelity) << '\n';
}

}  // namespace scramble
