// The four step-size-dependent taming transforms. Each coefficient of the
// order-1.5 scheme is divided by its own gamma-dependent denominator so the
// tamed values obey hard bounds (grad: 2^{1/3}/gamma, Hessian: 1/gamma,
// Hessian-gradient: ~1/gamma, vector Laplacian: ~1/sqrt(gamma)) while
// converging to the raw coefficients as gamma -> 0.
#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "hola/errors.hpp"
#include "hola/linalg.hpp"
#include "hola/potentials.hpp"

namespace hola {

struct TamedDrift {
  Eigen::VectorXd grad_t;
  Eigen::MatrixXd hess_t;
  Eigen::VectorXd hess_grad_t;
  Eigen::VectorXd vec_lap_t;
  double gamma = 0.0;

  void resize(Eigen::Index d) {
    grad_t.resize(d);
    hess_t.resize(d, d);
    hess_grad_t.resize(d);
    vec_lap_t.resize(d);
  }
};

inline void check_gamma(double gamma) {
  if (!(gamma > 0.0) || !(gamma < 1.0))
    throw ArgumentError("step size gamma must lie in (0, 1), got " + std::to_string(gamma));
}

// No allocation when `out` is already sized for the stack's dimension.
inline void tame_into(const DerivativeStack& stack, const Eigen::VectorXd& x, double gamma,
                      TamedDrift& out) {
  check_gamma(gamma);
  const double gnorm = stack.grad.norm();
  const double xnorm = x.norm();
  const double hnorm = spectral_norm_sym(stack.hess);
  const double lnorm = stack.vec_lap_grad.norm();

  const double s = gamma * gnorm;  // gamma^{3/2} |g|^{3/2} = (gamma |g|)^{3/2}
  // (1 + s^{3/2})^{2/3}; for enormous s the denominator is s to double precision
  const double grad_den =
      s > 1e100 ? s : std::cbrt((1.0 + s * std::sqrt(s)) * (1.0 + s * std::sqrt(s)));
  out.grad_t = stack.grad / grad_den;
  out.hess_t = stack.hess / (1.0 + gamma * hnorm);
  out.hess_grad_t = stack.hess_grad / (1.0 + gamma * xnorm * hnorm * gnorm);
  out.vec_lap_t = stack.vec_lap_grad / (1.0 + std::sqrt(gamma) * xnorm * lnorm);
  out.gamma = gamma;
}

inline TamedDrift tame(const DerivativeStack& stack, const Eigen::VectorXd& x, double gamma) {
  if (!stack.grad.allFinite() || !stack.hess.allFinite() || !stack.hess_grad.allFinite() ||
      !stack.vec_lap_grad.allFinite())
    throw ArgumentError("tame: derivative stack has non-finite entries");
  TamedDrift out;
  out.resize(stack.grad.size());
  tame_into(stack, x, gamma, out);
  return out;
}

// |tamed - raw| per coefficient. The gradient gap obeys
// |grad_t - grad| <= (2/3) gamma^{3/2} |grad|^{5/2}, and the Hessian gap is
// exactly gamma |H|^2 / (1 + gamma |H|) in spectral norm.
struct TamingGap {
  double grad = 0.0;
  double hess = 0.0;
  double hess_grad = 0.0;
  double vec_lap = 0.0;
};

inline TamingGap taming_gap(const DerivativeStack& stack, const Eigen::VectorXd& x, double gamma) {
  const TamedDrift t = tame(stack, x, gamma);
  TamingGap g;
  g.grad = (t.grad_t - stack.grad).norm();
  g.hess = spectral_norm_sym(t.hess_t - stack.hess);
  g.hess_grad = (t.hess_grad_t - stack.hess_grad).norm();
  g.vec_lap = (t.vec_lap_t - stack.vec_lap_grad).norm();
  return g;
}

}  // namespace hola
