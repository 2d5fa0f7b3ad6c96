// Explicit constants of the Lipschitz-case theory: the contraction rate
// m~ = m L1/(m + L1), the admissible step-size range, the moment-bound
// constants q1, q2, the chain c1..c14 and the Wasserstein-bound prefactors
// Cbar (general) and Ctilde (Gaussian target), plus the iteration-count
// planner that balances the transient and bias terms.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>

#include "hola/errors.hpp"

namespace hola {

struct LipschitzConstants {
  // inputs
  double m = 0.0;   // strong convexity
  double L1 = 0.0;  // gradient Lipschitz
  double L2 = 0.0;  // Hessian Lipschitz
  double L = 0.0;   // third-derivative Lipschitz
  double d = 0.0;   // dimension

  // derived
  double m_tilde = 0.0;
  double gamma_max = 0.0;
  double q1 = 0.0;
  double q2 = 0.0;
  std::array<double, 14> c{};  // c[0] is c1, ..., c[13] is c14
};

inline LipschitzConstants derive_constants(double m, double L1, double L2, double L, double d) {
  if (!(m > 0.0) || !(L1 > 0.0) || !(L2 > 0.0) || !(L > 0.0) || !(d > 0.0))
    throw ArgumentError("derive_constants: all of (m, L1, L2, L, d) must be positive");
  LipschitzConstants k;
  k.m = m;
  k.L1 = L1;
  k.L2 = L2;
  k.L = L;
  k.d = d;

  const double mt = m * L1 / (m + L1);
  k.m_tilde = mt;
  k.gamma_max = std::min(1.0 / mt, 8.0 * mt * mt / (m * (2.0 * L1 * L1 + 7.0 * mt * L1)));

  const double L1_2 = L1 * L1, L1_4 = L1_2 * L1_2, L1_6 = L1_4 * L1_2, L1_8 = L1_4 * L1_4;
  const double L2_2 = L2 * L2, L2_4 = L2_2 * L2_2;
  const double d32 = d * std::sqrt(d);
  const double rt2 = std::sqrt(2.0);

  const double c1 = 5.0 * L1_2 / 4.0 + L1_4 / 2.0;
  const double c2 = 1.5 * L2_2 * d * d + 4.0 * L1_2 * d + 4.0 * d;
  const double c3 = 9.0 * (25.0 / 16.0 * L1_4 + L1_8 / 4.0);
  const double c4 = 81.0 / 4.0 * L2_4 * d * d * d * d + 416.0 * (L1_4 + 3.0) * d * d;
  const double c5 = 4.0 * c1 * L1_2 * L2_2;
  const double c6 = 4.0 * (L1_2 * L2_2 * c2 + L * c1 * d32 + 2.0 * L2_2 * c1 * d + 4.0 * L1_6);
  const double c7 = 4.0 * (L * c2 * d32 + 2.0 * L2_2 * c2 * d + 4.0 * L1_2 * L2_2 * d * d + 4.0 * L1_4 * d);
  const double c8 = 2.0 * L1_4 + 4.0 * L1_2 * L2_2 * d + 2.0 * L2_2 * d;
  const double c9 = (4.0 * L2_2 * c1 + 2.0 * L2_2 + 6.0 * L1_2 * L2_2 + 12.0 * L1_4 * L2_2) * d +
                    6.0 * L1_4 + 12.0 * L1_6;
  const double c10 = 2.0 * L * L * d * d * d * d + 4.0 * L2_2 * c2 * d + 12.0 * L2_4 * d * d * d +
                     32.0 * L1_2 * L2_2 * d * d + 12.0 * L2_2 * d * d + 16.0 * L1_4 * d;
  const double c11 = 4.0 / m * L1_2 * L2_2 * c1 + 2.0 * c5;
  const double c12 = 4.0 / m * (L1_2 * L2_2 * c2 + 4.0 * L1_6 + d32 * L * c1) + 2.0 * rt2 * c9 +
                     2.0 * c6 + 2.0 * d * L2_2 * c1;
  const double c13 = 2.0 * rt2 * c8;
  const double c14 = 4.0 / m * (4.0 * L1_2 * L2_2 * d + 4.0 * L1_4 * d + d32 * L * c2) +
                     2.0 * rt2 * c10 + 2.0 * c7 + 2.0 * L2_2 * d * c2;
  k.c = {c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, c11, c12, c13, c14};

  k.q1 = (L2_2 / (2.0 * mt) + 1.5 * L2_2) * d * d + (4.0 * L1_2 + 4.0) * d;
  // gamma-free form from the final line of the fourth-moment proof; the
  // statement's 8/(m~ gamma) variant would not be a step-size-uniform constant
  const double q2a = L2_2 / (2.0 * mt) + 1.5 * L2_2;
  k.q2 = (2.0 + 8.0 / mt) * q2a * q2a * d * d * d * d +
         32.0 * (1.0 + 42.0 / mt) * (L1_4 + 3.0) * d * d;
  return k;
}

inline void check_gamma_admissible(const LipschitzConstants& k, double gamma) {
  if (!(gamma > 0.0) || gamma >= k.gamma_max)
    throw StepSizeError("gamma = " + std::to_string(gamma) +
                        " is outside the admissible range (0, " + std::to_string(k.gamma_max) +
                        ") = (0, min(1/m~, 8 m~^2 / (m (2 L1^2 + 7 m~ L1))))");
}

// Prefactor of the gamma^3 bias term; depends on the start distance |x - x*|.
inline double cbar(const LipschitzConstants& k, double x0_dist) {
  const double r2 = x0_dist * x0_dist;
  return std::exp(k.m) / k.m *
         (k.c[13] + k.c[10] * (r2 * r2 + 8.0 * k.q2 / k.m_tilde) +
          k.c[11] * (r2 + k.q1 / k.m_tilde) + k.c[12] * (k.d / k.m + 2.0 * k.d));
}

// W2^2 bound: exp(-m n gamma) (2 |x-x*|^2 + 2d/m) + Cbar gamma^3.
inline double wasserstein_bound(const LipschitzConstants& k, double x0_dist, std::int64_t n,
                                double gamma) {
  check_gamma_admissible(k, gamma);
  if (n < 0) throw ArgumentError("wasserstein_bound: n must be >= 0");
  const double transient = std::exp(-k.m * static_cast<double>(n) * gamma) *
                           (2.0 * x0_dist * x0_dist + 2.0 * k.d / k.m);
  return transient + cbar(k, x0_dist) * gamma * gamma * gamma;
}

// Gaussian-target prefactor: Ctilde = (16 L1^4 e^m / m^2)(d + L1^2 (|x-x*|^2 + q1/m~))
// with the reduced q1 = (4 L1^2 + 4) d.
inline double ctilde(const LipschitzConstants& k, double x0_dist) {
  const double q1g = (4.0 * k.L1 * k.L1 + 4.0) * k.d;
  return 16.0 * k.L1 * k.L1 * k.L1 * k.L1 * std::exp(k.m) / (k.m * k.m) *
         (k.d + k.L1 * k.L1 * (x0_dist * x0_dist + q1g / k.m_tilde));
}

inline double gaussian_bound(const LipschitzConstants& k, double x0_dist, std::int64_t n,
                             double gamma) {
  check_gamma_admissible(k, gamma);
  if (n < 0) throw ArgumentError("gaussian_bound: n must be >= 0");
  const double transient = std::exp(-k.m * static_cast<double>(n) * gamma) *
                           (2.0 * x0_dist * x0_dist + 2.0 * k.d / k.m);
  return transient + ctilde(k, x0_dist) * gamma * gamma * gamma;
}

struct MixingPlan {
  std::int64_t n = 0;
  double gamma = 0.0;  // balances transient and bias: gamma = (eps^2 / (2 Cbar))^{1/3}
};

// Smallest n with e^{-m n gamma} (2|x-x*|^2 + 2d/m) + Cbar gamma^3 <= eps^2 at
// the balancing gamma; n >= ((2 Cbar)^{1/3} / (m eps^{2/3})) log(4 (|x-x*|^2 + d/m) / eps^2).
inline MixingPlan mixing_time(const LipschitzConstants& k, double x0_dist, double eps) {
  if (!(eps > 0.0)) throw ArgumentError("mixing_time: eps must be positive");
  MixingPlan plan;
  const double C = cbar(k, x0_dist);
  plan.gamma = std::cbrt(eps * eps / (2.0 * C));
  const double arg = 4.0 * (x0_dist * x0_dist + k.d / k.m) / (eps * eps);
  if (arg <= 1.0) {
    plan.n = 0;
    return plan;
  }
  const double n_real = std::cbrt(2.0 * C) / (k.m * std::pow(eps, 2.0 / 3.0)) * std::log(arg);
  plan.n = static_cast<std::int64_t>(std::ceil(n_real));
  return plan;
}

}  // namespace hola
