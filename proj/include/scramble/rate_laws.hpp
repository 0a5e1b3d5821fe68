#pragma once

#include <cmath>
#include <variant>
#include <vector>

#include "scramble/core.hpp"

namespace scramble {

//! Gamma_L = gamma1 * L^alpha.
struct PowerLaw {
  double gamma1 = 0.0;
  double alpha = 1.0;
};

//! Two-branch critical form of the asymptotic decay rate per unit cluster
//! size, evaluated at K:
//!   p < p_c:  scale * (p_c - p)^s        * K^alpha0
//!   p > p_c:  scale * (p - p_c)^(-2 nu)  * K^alpha_inf
//! Singular at p == p_c.
struct AnsatzLaw {
  double p = 0.0;
  double p_c = 0.026;
  double s = -0.911;
  double nu = -0.57;
  double alpha0 = 0.48;
  double alpha_inf = 0.96;
  double scale = 1.0;
};

//! Explicit per-level rates Gamma_1..Gamma_n.
struct CustomLaw {
  std::vector<double> rates;
};

using RateLaw = std::variant<PowerLaw, AnsatzLaw, CustomLaw>;

inline double ansatz_rate(const AnsatzLaw& a, double k) {
  require(k > 0.0, "ansatz_rate: cluster size must be positive");
  require(a.scale >= 0.0, "ansatz_rate: scale must be nonnegative");
  require(a.p >= 0.0 && a.p <= 1.0, "ansatz_rate: p must lie in [0, 1]");
  require(a.p_c > 0.0 && a.p_c < 1.0, "ansatz_rate: p_c must lie in (0, 1)");
  require(a.p != a.p_c, "ansatz_rate: p equals p_c, the critical form is singular");
  if (a.p < a.p_c) return a.scale * std::pow(a.p_c - a.p, a.s) * std::pow(k, a.alpha0);
  return a.scale * std::pow(a.p - a.p_c, -2.0 * a.nu) * std::pow(k, a.alpha_inf);
}

inline double ansatz_rate(double p, double k, AnsatzLaw params) {
  params.p = p;
  return ansatz_rate(params, k);
}

}  // namespace scramble
