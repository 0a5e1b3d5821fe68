#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <unordered_map>
#include <vector>

#include "scramble/core.hpp"

namespace scramble {

//! Single-site symbol of a spin-1/2 product operator.  The numeric values fix
//! the lexicographic order id < z < x < y used everywhere (enumeration,
//! base-4 codes, test ordering).
enum class Axis : std::uint8_t { id = 0, z = 1, x = 2, y = 3 };

inline bool axis_active(Axis a) { return a == Axis::x || a == Axis::y; }

inline char axis_char(Axis a) {
  switch (a) {
    case Axis::id: return 'e';
    case Axis::z: return 'z';
    case Axis::x: return 'x';
    case Axis::y: return 'y';
  }
  return '?';
}

//! Word of per-site symbols labelling one product operator on n spins.
//! Value type; ordering is lexicographic with site 0 most significant.
class ProductIndex {
 public:
  ProductIndex() = default;
  explicit ProductIndex(std::vector<Axis> symbols) : symbols_(std::move(symbols)) {}
  ProductIndex(std::initializer_list<Axis> symbols) : symbols_(symbols) {}

  static ProductIndex from_code(std::uint64_t code, int n_spins) {
    require(n_spins >= 1 && n_spins <= 31, "ProductIndex::from_code: n_spins outside 1..31");
    std::vector<Axis> s(static_cast<std::size_t>(n_spins));
    for (int j = n_spins - 1; j >= 0; --j) {
      s[static_cast<std::size_t>(j)] = static_cast<Axis>(code & 3u);
      code >>= 2;
    }
    require(code == 0, "ProductIndex::from_code: code out of range for n_spins");
    return ProductIndex(std::move(s));
  }

  //! Base-4 encoding, site 0 in the most significant digit, so numeric order
  //! of codes equals lexicographic order of words.
  std::uint64_t code() const {
    std::uint64_t c = 0;
    for (Axis a : symbols_) c = (c << 2) | static_cast<std::uint64_t>(a);
    return c;
  }

  int size() const { return static_cast<int>(symbols_.size()); }
  Axis operator[](int j) const { return symbols_[static_cast<std::size_t>(j)]; }
  const std::vector<Axis>& symbols() const { return symbols_; }

  ProductIndex with_symbol(int j, Axis a) const {
    ProductIndex out = *this;
    out.symbols_[static_cast<std::size_t>(j)] = a;
    return out;
  }

  std::string str() const {
    std::string s;
    s.reserve(symbols_.size());
    for (Axis a : symbols_) s.push_back(axis_char(a));
    return s;
  }

  friend bool operator==(const ProductIndex&, const ProductIndex&) = default;
  friend auto operator<=>(const ProductIndex&, const ProductIndex&) = default;

 private:
  std::vector<Axis> symbols_;
};

struct ProductIndexHash {
  std::size_t operator()(const ProductIndex& u) const {
    return std::hash<std::uint64_t>{}(u.code());
  }
};

//! Expansion coefficients of an operator over the product basis.
using CoefficientMap = std::unordered_map<ProductIndex, Complex, ProductIndexHash>;

//! All 4^n words in lexicographic order.  Exhaustive-test sized only.
inline std::vector<ProductIndex> enumerate_product_indices(int n_spins) {
  require(n_spins >= 1 && n_spins <= 12, "enumerate_product_indices: n_spins outside 1..12");
  std::uint64_t total = 1ull << (2 * n_spins);
  std::vector<ProductIndex> out;
  out.reserve(total);
  for (std::uint64_t code = 0; code < total; ++code)
    out.push_back(ProductIndex::from_code(code, n_spins));
  return out;
}

//! Number of sites carrying x or y.
inline int active_count(const ProductIndex& u) {
  int k = 0;
  for (int j = 0; j < u.size(); ++j)
    if (axis_active(u[j])) ++k;
  return k;
}

namespace detail {
inline void require_same_length(const ProductIndex& u, const ProductIndex& v, const char* who) {
  if (u.size() != v.size()) throw Error(std::string(who) + ": mismatched index lengths");
}
}  // namespace detail

//! Sites where the two words disagree and at least one symbol is id or z.
inline int hamming_z0(const ProductIndex& u, const ProductIndex& v) {
  detail::require_same_length(u, v, "hamming_z0");
  int k = 0;
  for (int j = 0; j < u.size(); ++j)
    if (u[j] != v[j] && (!axis_active(u[j]) || !axis_active(v[j]))) ++k;
  return k;
}

//! Sites where the two words disagree within {x, y}.
inline int hamming_xy(const ProductIndex& u, const ProductIndex& v) {
  detail::require_same_length(u, v, "hamming_xy");
  int k = 0;
  for (int j = 0; j < u.size(); ++j)
    if (u[j] != v[j] && axis_active(u[j]) && axis_active(v[j])) ++k;
  return k;
}

//! True when v is a site permutation of u (equal symbol multisets).
inline bool xy_permutation_equivalent(const ProductIndex& u, const ProductIndex& v) {
  detail::require_same_length(u, v, "xy_permutation_equivalent");
  std::array<int, 4> cu{}, cv{};
  for (int j = 0; j < u.size(); ++j) {
    ++cu[static_cast<std::size_t>(u[j])];
    ++cv[static_cast<std::size_t>(v[j])];
  }
  return cu == cv;
}

//! Structure factor of the double commutator with the total z magnetization:
//!   Tr{[Iz, P_u] [Iz, P_v]^dag} / Tr(P_u P_u^dag)  for orthonormal P.
//! Nonzero only on the diagonal (active count) and between words linked by an
//! x<->y flip at exactly two active sites: +2 when the flipped pair preserves
//! the symbol multiset, -2 when it does not.
inline int l_pair(const ProductIndex& u, const ProductIndex& v) {
  detail::require_same_length(u, v, "l_pair");
  if (u == v) return active_count(u);
  if (hamming_z0(u, v) != 0) return 0;
  if (hamming_xy(u, v) != 2) return 0;
  return xy_permutation_equivalent(u, v) ? 2 : -2;
}

struct CommutatorTerm {
  ProductIndex target;
  Complex phase;
};

//! [Iz, P_u] expanded over the product basis: one term per active site, with
//! x -> y carrying +i and y -> x carrying -i.
inline std::vector<CommutatorTerm> commutator_expand(const ProductIndex& u) {
  std::vector<CommutatorTerm> out;
  for (int j = 0; j < u.size(); ++j) {
    if (u[j] == Axis::x)
      out.push_back({u.with_symbol(j, Axis::y), Complex(0.0, 1.0)});
    else if (u[j] == Axis::y)
      out.push_back({u.with_symbol(j, Axis::x), Complex(0.0, -1.0)});
  }
  return out;
}

//! Pair-summed cluster-size functional
//!   K = (1 / fidelity_norm) * sum_{u,v} C0_u * conj(Cp_v) * l_pair(u, v).
//! Only flip-linked pairs contribute, so the sum runs over the keys of c0 and
//! the at most C(active,2) partners of each key.  Returns the real part; the
//! imaginary part of the raw sum is discarded (it vanishes for physical
//! coefficient pairs).  drop_cross_terms keeps only u == v, which reproduces
//! the diagonal (local) contribution.
inline double k_pair_sum(const CoefficientMap& c0, const CoefficientMap& cp,
                         bool drop_cross_terms, double fidelity_norm) {
  require(fidelity_norm != 0.0, "k_pair_sum: fidelity_norm must be nonzero");
  if (!c0.empty() && !cp.empty())
    detail::require_same_length(c0.begin()->first, cp.begin()->first, "k_pair_sum");
  auto lookup = [&cp](const ProductIndex& v) -> Complex {
    auto it = cp.find(v);
    return it == cp.end() ? Complex(0.0) : it->second;
  };
  Complex acc(0.0);
  std::vector<int> active_sites;
  for (const auto& [u, cu] : c0) {
    active_sites.clear();
    for (int j = 0; j < u.size(); ++j)
      if (axis_active(u[j])) active_sites.push_back(j);
    acc += cu * std::conj(lookup(u)) * static_cast<double>(active_sites.size());
    if (drop_cross_terms) continue;
    for (std::size_t a = 0; a + 1 < active_sites.size(); ++a) {
      for (std::size_t b = a + 1; b < active_sites.size(); ++b) {
        int ja = active_sites[a], jb = active_sites[b];
        ProductIndex v = u.with_symbol(ja, u[ja] == Axis::x ? Axis::y : Axis::x)
                             .with_symbol(jb, u[jb] == Axis::x ? Axis::y : Axis::x);
        double sign = (u[ja] == u[jb]) ? -2.0 : 2.0;
        acc += cu * std::conj(lookup(v)) * sign;
      }
    }
  }
  return acc.real() / fidelity_norm;
}

}  // namespace scramble
