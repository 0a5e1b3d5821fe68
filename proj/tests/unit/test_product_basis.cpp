#include <catch2/catch_amalgamated.hpp>

#include "scramble/product_basis.hpp"
#include "test_helpers.hpp"

using namespace scramble;
using Catch::Approx;

namespace {

ProductIndex word(std::initializer_list<Axis> s) { return ProductIndex(s); }

constexpr Axis id = Axis::id;
constexpr Axis az = Axis::z;
constexpr Axis ax = Axis::x;
constexpr Axis ay = Axis::y;

}  // namespace

TEST_CASE("codes round-trip and order lexicographically") {
  for (int n = 1; n <= 4; ++n) {
    auto all = enumerate_product_indices(n);
    REQUIRE(all.size() == (std::size_t(1) << (2 * n)));
    for (std::size_t i = 0; i < all.size(); ++i) {
      REQUIRE(all[i].code() == i);
      REQUIRE(ProductIndex::from_code(all[i].code(), n) == all[i]);
      if (i > 0) REQUIRE(all[i - 1] < all[i]);
    }
  }
  // site 0 is the most significant digit: the second word flips the last site
  auto all = enumerate_product_indices(2);
  REQUIRE(all[0] == word({id, id}));
  REQUIRE(all[1] == word({id, az}));
  REQUIRE(all[4] == word({az, id}));
}

TEST_CASE("from_code rejects out-of-range input") {
  REQUIRE_THROWS_AS(ProductIndex::from_code(16, 2), Error);
  REQUIRE_THROWS_AS(ProductIndex::from_code(0, 0), Error);
  REQUIRE_THROWS_AS(ProductIndex::from_code(0, 32), Error);
}

TEST_CASE("active_count counts x and y sites") {
  REQUIRE(active_count(word({id, id, id})) == 0);
  REQUIRE(active_count(word({ax, ay, id, az})) == 2);
  REQUIRE(active_count(word({ax, ax, ay, ay})) == 4);
  REQUIRE(active_count(word({az, az})) == 0);
}

TEST_CASE("hamming splits respect the id/z vs x/y partition") {
  ProductIndex u = word({ax, ay, az, id});
  ProductIndex v = word({ay, ay, id, id});
  // site 0: x vs y -> xy channel; site 2: z vs id -> z0 channel
  REQUIRE(hamming_xy(u, v) == 1);
  REQUIRE(hamming_z0(u, v) == 1);
  // x vs z counts in the z0 channel because one side is inactive
  REQUIRE(hamming_z0(word({ax}), word({az})) == 1);
  REQUIRE(hamming_xy(word({ax}), word({az})) == 0);
  REQUIRE_THROWS_AS(hamming_z0(word({ax}), word({ax, ay})), Error);
  REQUIRE_THROWS_AS(hamming_xy(word({ax}), word({ax, ay})), Error);
}

TEST_CASE("xy_permutation_equivalent compares symbol multisets") {
  REQUIRE(xy_permutation_equivalent(word({ax, ay}), word({ay, ax})));
  REQUIRE_FALSE(xy_permutation_equivalent(word({ax, ax}), word({ay, ay})));
  REQUIRE(xy_permutation_equivalent(word({ax, az, id}), word({id, az, ax})));
  REQUIRE_THROWS_AS(xy_permutation_equivalent(word({ax}), word({ax, ay})), Error);
}

TEST_CASE("l_pair classification on fixed words") {
  REQUIRE(l_pair(word({ax, ay, az}), word({ax, ay, az})) == 2);
  REQUIRE(l_pair(word({ax, ay}), word({ay, ax})) == 2);
  REQUIRE(l_pair(word({ax, ax}), word({ay, ay})) == -2);
  REQUIRE(l_pair(word({ax, id}), word({ay, id})) == 0);    // single flip
  REQUIRE(l_pair(word({ax, ay}), word({ax, ax})) == 0);    // single flip
  REQUIRE(l_pair(word({ax, az}), word({ay, id})) == 0);    // z0 mismatch
  REQUIRE(l_pair(word({ax, ay, ax}), word({ay, ax, ax})) == 2);
  REQUIRE(l_pair(word({ax, ax, ay}), word({ay, ay, ay})) == -2);
}

TEST_CASE("l_pair is symmetric and matches its definition exhaustively") {
  for (int n = 1; n <= 3; ++n) {
    auto all = enumerate_product_indices(n);
    for (const auto& u : all)
      for (const auto& v : all) {
        int luv = l_pair(u, v);
        REQUIRE(luv == l_pair(v, u));
        if (u == v) {
          REQUIRE(luv == active_count(u));
        } else if (hamming_z0(u, v) != 0 || hamming_xy(u, v) != 2) {
          REQUIRE(luv == 0);
        } else {
          REQUIRE(luv == (xy_permutation_equivalent(u, v) ? 2 : -2));
        }
      }
  }
}

TEST_CASE("l_pair equals the dense double-commutator inner product") {
  // Tr{[Iz,P_u][Iz,P_v]^dag} over orthonormal product operators
  for (int n = 1; n <= 3; ++n) {
    auto all = enumerate_product_indices(n);
    DenseOperator iz = oracle::brute_collective_z(n);
    std::vector<DenseOperator> comms;
    comms.reserve(all.size());
    for (const auto& u : all) {
      DenseOperator p = oracle::product_op(u);
      comms.push_back(iz * p - p * iz);
    }
    for (std::size_t a = 0; a < all.size(); ++a)
      for (std::size_t b = 0; b < all.size(); ++b) {
        Complex tr = (comms[a].cwiseProduct(comms[b].conjugate())).sum();
        REQUIRE(std::abs(tr.imag()) < 1e-12);
        REQUIRE(tr.real() == Approx(double(l_pair(all[a], all[b]))).margin(1e-12));
      }
  }
}

TEST_CASE("commutator_expand lists one signed flip per active site") {
  auto terms = commutator_expand(word({ax, az, ay, id}));
  REQUIRE(terms.size() == 2);
  REQUIRE(terms[0].target == word({ay, az, ay, id}));
  REQUIRE(terms[0].phase == Complex(0.0, 1.0));
  REQUIRE(terms[1].target == word({ax, az, ax, id}));
  REQUIRE(terms[1].phase == Complex(0.0, -1.0));
  REQUIRE(commutator_expand(word({id, az})).empty());
}

TEST_CASE("commutator_expand reproduces the dense commutator") {
  for (int n = 1; n <= 3; ++n) {
    DenseOperator iz = oracle::brute_collective_z(n);
    for (const auto& u : enumerate_product_indices(n)) {
      DenseOperator p = oracle::product_op(u);
      DenseOperator direct = iz * p - p * iz;
      DenseOperator expanded = DenseOperator::Zero(p.rows(), p.cols());
      for (const auto& term : commutator_expand(u))
        expanded += term.phase * oracle::product_op(term.target);
      REQUIRE((direct - expanded).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("k_pair_sum equals the dense double-commutator functional") {
  for (int n = 2; n <= 3; ++n) {
    DenseOperator o = oracle::random_operator(n, 77 + n);
    CoefficientMap cm = product_basis_coefficients(o);
    double pair_value = k_pair_sum(cm, cm, false, 1.0);
    DenseOperator iz = oracle::brute_collective_z(n);
    DenseOperator co = iz * o - o * iz;
    Complex dense = (co.cwiseProduct(co.conjugate())).sum();
    REQUIRE(pair_value == Approx(dense.real()).epsilon(1e-10));
  }
}

TEST_CASE("k_pair_sum diagonal mode keeps only the local term") {
  DenseOperator o = oracle::random_operator(3, 5);
  CoefficientMap cm = product_basis_coefficients(o);
  double diag = k_pair_sum(cm, cm, true, 1.0);
  double direct = 0.0;
  for (const auto& [u, cu] : cm) direct += std::norm(cu) * active_count(u);
  REQUIRE(diag == Approx(direct).epsilon(1e-12));
}

TEST_CASE("k_pair_sum validates its inputs") {
  CoefficientMap a, b;
  a.emplace(word({ax, ay}), Complex(1.0));
  b.emplace(word({ax}), Complex(1.0));
  REQUIRE_THROWS_AS(k_pair_sum(a, a, false, 0.0), Error);
  REQUIRE_THROWS_AS(k_pair_sum(a, b, false, 1.0), Error);
}

TEST_CASE("missing partner words count as zero weight") {
  CoefficientMap a;
  a.emplace(word({ax, ax}), Complex(2.0));
  // partner (y,y) absent: only the diagonal survives
  REQUIRE(k_pair_sum(a, a, false, 1.0) == Approx(4.0 * 2.0).epsilon(1e-12));
  CoefficientMap b = a;
  b.emplace(word({ay, ay}), Complex(1.0));
  // cross term: 2 * conj(1) * (-2)
  REQUIRE(k_pair_sum(a, b, false, 1.0) == Approx(8.0 - 4.0).epsilon(1e-12));
}
