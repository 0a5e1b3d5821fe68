#pragma once

#include <Eigen/Dense>
#include <bit>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "scramble/core.hpp"
#include "scramble/product_basis.hpp"

namespace scramble {

using DenseOperator = Eigen::MatrixXcd;

//! Dense propagation cap: 2^12 = 4096 amplitudes.
inline constexpr int max_exact_n = 12;
//! Product-basis expansion cap: 4^8 coefficients.
inline constexpr int max_expand_n = 8;

///! Computational basis convention used by every dense builder: bit j of the
//! basis index is spin j, bit value 0 means m_j = +1/2.
inline double zeeman_m(std::uint32_t state, int n_spins) {
  return 0.5 * (n_spins - 2 * std::popcount(state));
}

namespace detail {
inline int dim_to_spins(Eigen::Index dim, const char* who) {
  if (dim < 2 || (dim & (dim - 1)) != 0)
    throw Error(std::string(who) + ": operator dimension is not a power of two");
  return std::countr_zero(static_cast<std::uint64_t>(dim));
}
}  // namespace detail

//! Symmetric pair couplings in rad/ms, zero diagonal.
class CouplingMatrix {
 public:
  explicit CouplingMatrix(Eigen::MatrixXd d) : d_(std::move(d)) {
    require(d_.rows() == d_.cols() && d_.rows() >= 1, "CouplingMatrix: table must be square");
    double scale = std::max(1.0, d_.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < d_.rows(); ++i) {
      require(d_(i, i) == 0.0, "CouplingMatrix: diagonal must be zero");
      for (Eigen::Index j = i + 1; j < d_.cols(); ++j)
        require(std::abs(d_(i, j) - d_(j, i)) <= 1e-12 * scale,
                "CouplingMatrix: table must be symmetric");
    }
  }

  static CouplingMatrix all_to_all(int n, double d) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(n, n, d);
    m.diagonal().setZero();
    return CouplingMatrix(std::move(m));
  }

  static CouplingMatrix chain(int n, double d) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) m(i, i + 1) = m(i + 1, i) = d;
    return CouplingMatrix(std::move(m));
  }

  //! Gaussian couplings with mean zero and standard deviation d_scale,
  //! reproducible from the seed.
  static CouplingMatrix random_gaussian(int n, double d_scale, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, d_scale);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) m(i, j) = m(j, i) = dist(rng);
    return CouplingMatrix(std::move(m));
  }

  //! Loads rows `i,j,d_rad_per_ms` (0-based spin indices); both orders of a
  //! pair fill the same entry, repeats are rejected.
  static CouplingMatrix from_csv(const std::string& path);

  int spins() const { return static_cast<int>(d_.rows()); }
  double operator()(int i, int j) const { return d_(i, j); }
  const Eigen::MatrixXd& table() const { return d_; }

 private:
  Eigen::MatrixXd d_;
};

inline CouplingMatrix CouplingMatrix::from_csv(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open coupling table '" + path + "'");
  std::string line;
  auto next_data_line = [&]() -> bool {
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      return true;
    }
    return false;
  };
  require(next_data_line(), "coupling table '" + path + "' is empty");
  require(line == "i,j,d_rad_per_ms",
          "coupling table '" + path + "': expected header 'i,j,d_rad_per_ms'");
  struct Row {
    long i, j;
    double d;
  };
  std::vector<Row> rows;
  long n = 0;
  while (next_data_line()) {
    std::stringstream ss(line);
    std::string fi, fj, fd;
    bool ok = static_cast<bool>(std::getline(ss, fi, ',')) &&
              static_cast<bool>(std::getline(ss, fj, ',')) && static_cast<bool>(std::getline(ss, fd));
    require(ok, "coupling table '" + path + "': malformed row '" + line + "'");
    long i = static_cast<long>(parse_u64(fi, "coupling row index i"));
    long j = static_cast<long>(parse_u64(fj, "coupling row index j"));
    double d = parse_double(fd, "coupling value");
    require(i != j, "coupling table '" + path + "': self-coupling row");
    rows.push_back({i, j, d});
    n = std::max({n, i + 1, j + 1});
  }
  require(n >= 2, "coupling table '" + path + "': needs at least two spins");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd seen = Eigen::MatrixXd::Zero(n, n);
  for (const Row& r : rows) {
    require(seen(r.i, r.j) == 0.0, "coupling table '" + path + "': duplicate pair row");
    seen(r.i, r.j) = seen(r.j, r.i) = 1.0;
    m(r.i, r.j) = m(r.j, r.i) = r.d;
  }
  return CouplingMatrix(std::move(m));
}

inline void write_coupling_csv(std::ostream& out, const CouplingMatrix& c) {
  out << "i,j,d_rad_per_ms\n";
  for (int i = 0; i < c.spins(); ++i)
    for (int j = i + 1; j < c.spins(); ++j)
      if (c(i, j) != 0.0)
        out << i << ',' << j << ',' << format_double(c(i, j)) << '\n';
}

namespace detail {
inline void require_buildable(int n, const char* who) {
  if (n < 1 || n > max_exact_n)
    throw Error(std::string(who) + ": spin count outside supported range 1.." +
                std::to_string(max_exact_n));
}
}  // namespace detail

//! Secular dipolar Hamiltonian
//!   sum_{i<j} d_ij (2 Iz_i Iz_j - Ix_i Ix_j - Iy_i Iy_j),
//! diagonal in Zeeman occupation plus flip-flop terms of amplitude -d_ij / 2.
inline DenseOperator build_dipolar(const CouplingMatrix& c) {
  int n = c.spins();
  detail::require_buildable(n, "build_dipolar");
  std::uint32_t dim = 1u << n;
  DenseOperator h = DenseOperator::Zero(dim, dim);
  for (std::uint32_t b = 0; b < dim; ++b) {
    double diag = 0.0;
    for (int i = 0; i < n; ++i) {
      double mi = (b >> i) & 1u ? -0.5 : 0.5;
      for (int j = i + 1; j < n; ++j) {
        double mj = (b >> j) & 1u ? -0.5 : 0.5;
        diag += 2.0 * c(i, j) * mi * mj;
        if (((b >> i) & 1u) != ((b >> j) & 1u)) {
          std::uint32_t b2 = b ^ (1u << i) ^ (1u << j);
          h(b2, b) += -0.5 * c(i, j);
        }
      }
    }
    h(b, b) = diag;
  }
  return h;
}

//! Double-quantum Hamiltonian sum_{i<j} d_ij (Ip_i Ip_j + Im_i Im_j); couples
//! pairs of equally aligned spins flipped together.
inline DenseOperator build_double_quantum(const CouplingMatrix& c) {
  int n = c.spins();
  detail::require_buildable(n, "build_double_quantum");
  std::uint32_t dim = 1u << n;
  DenseOperator h = DenseOperator::Zero(dim, dim);
  for (std::uint32_t b = 0; b < dim; ++b)
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (((b >> i) & 1u) == ((b >> j) & 1u)) {
          std::uint32_t b2 = b ^ (1u << i) ^ (1u << j);
          h(b2, b) += c(i, j);
        }
  return h;
}

//! Interpolated forward generator (1 - p) h0 + p sigma.
inline DenseOperator build_forward(const DenseOperator& h0, const DenseOperator& sigma, double p) {
  require(p >= 0.0 && p <= 1.0, "build_forward: p must lie in [0, 1]");
  require(h0.rows() == sigma.rows() && h0.cols() == sigma.cols(),
          "build_forward: operator dimensions differ");
  return (1.0 - p) * h0 + p * sigma;
}

//! Total z magnetization, diagonal in the computational basis.
inline DenseOperator collective_z(int n) {
  detail::require_buildable(n, "collective_z");
  std::uint32_t dim = 1u << n;
  DenseOperator iz = DenseOperator::Zero(dim, dim);
  for (std::uint32_t b = 0; b < dim; ++b) iz(b, b) = zeeman_m(b, n);
  return iz;
}

inline Eigen::VectorXd collective_z_diagonal(int n) {
  detail::require_buildable(n, "collective_z_diagonal");
  std::uint32_t dim = 1u << n;
  Eigen::VectorXd m(dim);
  for (std::uint32_t b = 0; b < dim; ++b) m(b) = zeeman_m(b, n);
  return m;
}

inline double collective_z_norm2(int n) {
  // Tr(Iz^2) = n 2^(n-2)
  return n * std::pow(2.0, n - 2);
}

//! exp(-i phi Iz) as a diagonal operator.
inline DenseOperator phase_rotation(int n, double phi) {
  detail::require_buildable(n, "phase_rotation");
  std::uint32_t dim = 1u << n;
  DenseOperator r = DenseOperator::Zero(dim, dim);
  for (std::uint32_t b = 0; b < dim; ++b)
    r(b, b) = std::exp(Complex(0.0, -phi * zeeman_m(b, n)));
  return r;
}

inline Complex trace_product(const DenseOperator& a, const DenseOperator& b_dagger_of) {
  // Tr(a b^dag)
  return (a.cwiseProduct(b_dagger_of.conjugate())).sum();
}

//! Cached eigendecomposition of a Hermitian generator; amortizes repeated
//! propagation to many times.
class Evolver {
 public:
  explicit Evolver(const DenseOperator& h) {
    require(h.rows() == h.cols(), "Evolver: generator must be square");
    double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    require((h - h.adjoint()).cwiseAbs().maxCoeff() <= 1e-12 * scale,
            "Evolver: generator is not Hermitian");
    Eigen::SelfAdjointEigenSolver<DenseOperator> es(h);
    require(es.info() == Eigen::Success, "Evolver: eigendecomposition failed");
    vals_ = es.eigenvalues();
    vecs_ = es.eigenvectors();
  }

  Eigen::Index dim() const { return vals_.size(); }

  //! U(t) = exp(-i sign h t).
  DenseOperator propagator(double t, int sign = +1) const {
    Eigen::VectorXcd ph(vals_.size());
    for (Eigen::Index k = 0; k < vals_.size(); ++k)
      ph(k) = std::exp(Complex(0.0, -sign * vals_(k) * t));
    return vecs_ * ph.asDiagonal() * vecs_.adjoint();
  }

  //! Conjugates obs by the propagator: U(t) obs U(t)^dag.
  DenseOperator evolve(const DenseOperator& obs, double t, int sign = +1) const {
    require(obs.rows() == dim() && obs.cols() == dim(), "Evolver::evolve: dimension mismatch");
    DenseOperator u = propagator(t, sign);
    return u * obs * u.adjoint();
  }

 private:
  Eigen::VectorXd vals_;
  Eigen::MatrixXcd vecs_;
};

///! One-shot form of Evolver::evolve.
inline DenseOperator evolve(const DenseOperator& h, const DenseOperator& obs, double t,
                            int sign = +1) {
  return Evolver(h).evolve(obs, t, sign);
}

namespace detail {

//! In-place single-site transform between matrix entries and product-basis
//! coefficients.  Site j occupies base-4 digit j (bits 2j, 2j+1) of the flat
//! index; digit values follow Axis: 0 id, 1 z, 2 x, 3 y.
inline void site_transform(std::vector<Complex>& f, int n, bool forward) {
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  const Complex i_unit(0.0, 1.0);
  std::size_t total = f.size();
  for (int j = 0; j < n; ++j) {
    std::size_t stride = std::size_t(1) << (2 * j);
    for (std::size_t base = 0; base < total; ++base) {
      if ((base >> (2 * j)) & 3u) continue;
      Complex& e0 = f[base];
      Complex& e1 = f[base + stride];
      Complex& e2 = f[base + 2 * stride];
      Complex& e3 = f[base + 3 * stride];
      if (forward) {
        // entries (a, b, c, d) = (up|A|up, up|A|dn, dn|A|up, dn|A|dn)
        Complex a = e0, b = e1, c = e2, d = e3;
        e0 = (a + d) * inv_sqrt2;
        e1 = (a - d) * inv_sqrt2;
        e2 = (b + c) * inv_sqrt2;
        e3 = i_unit * (b - c) * inv_sqrt2;
      } else {
        Complex cid = e0, cz = e1, cx = e2, cy = e3;
        e0 = (cid + cz) * inv_sqrt2;
        e1 = (cx - i_unit * cy) * inv_sqrt2;
        e2 = (cx + i_unit * cy) * inv_sqrt2;
        e3 = (cid - cz) * inv_sqrt2;
      }
    }
  }
}

inline std::size_t pair_code(std::uint32_t r, std::uint32_t c, int n) {
  std::size_t idx = 0;
  for (int j = 0; j < n; ++j) {
    std::size_t p = (((r >> j) & 1u) << 1) | ((c >> j) & 1u);
    idx |= p << (2 * j);
  }
  return idx;
}

}  // namespace detail

//! Coefficients of obs over the orthonormal product basis (per-site factors
//! identity/2, Iz, Ix, Iy scaled by sqrt(2)).  With normalize_by_iz_norm the
//! result is divided by sqrt(Tr Iz^2) so the seeded protocol starts with unit
//! weight.
inline CoefficientMap product_basis_coefficients(const DenseOperator& obs,
                                                 bool normalize_by_iz_norm = false) {
  int n = detail::dim_to_spins(obs.rows(), "product_basis_coefficients");
  require(obs.rows() == obs.cols(), "product_basis_coefficients: operator must be square");
  require(n <= max_expand_n, "product_basis_coefficients: spin count outside supported range 1.." +
                                 std::to_string(max_expand_n));
  std::uint32_t dim = 1u << n;
  std::vector<Complex> f(std::size_t(1) << (2 * n));
  for (std::uint32_t r = 0; r < dim; ++r)
    for (std::uint32_t c = 0; c < dim; ++c) f[detail::pair_code(r, c, n)] = obs(r, c);
  detail::site_transform(f, n, true);
  double scale = normalize_by_iz_norm ? 1.0 / std::sqrt(collective_z_norm2(n)) : 1.0;
  CoefficientMap out;
  out.reserve(f.size());
  for (std::size_t idx = 0; idx < f.size(); ++idx) {
    std::vector<Axis> symbols(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) symbols[static_cast<std::size_t>(j)] = static_cast<Axis>((idx >> (2 * j)) & 3u);
    out.emplace(ProductIndex(std::move(symbols)), f[idx] * scale);
  }
  return out;
}

//! Inverse of product_basis_coefficients (missing words count as zero).
inline DenseOperator product_basis_reconstruct(const CoefficientMap& coeffs, int n) {
  require(n >= 1 && n <= max_expand_n, "product_basis_reconstruct: spin count outside 1.." +
                                           std::to_string(max_expand_n));
  std::vector<Complex> f(std::size_t(1) << (2 * n), Complex(0.0));
  for (const auto& [u, cu] : coeffs) {
    require(u.size() == n, "product_basis_reconstruct: word length mismatch");
    std::size_t idx = 0;
    for (int j = 0; j < n; ++j)
      idx |= static_cast<std::size_t>(u[j]) << (2 * j);
    f[idx] = cu;
  }
  detail::site_transform(f, n, false);
  std::uint32_t dim = 1u << n;
  DenseOperator obs = DenseOperator::Zero(dim, dim);
  for (std::uint32_t r = 0; r < dim; ++r)
    for (std::uint32_t c = 0; c < dim; ++c) obs(r, c) = f[detail::pair_code(r, c, n)];
  return obs;
}

}  // namespace scramble
