// One-step kernels and chain drivers. Four schemes: the tamed order-1.5
// scheme (hola), its untamed counterpart for Lipschitz targets
// (hola_lipschitz), and the Euler baselines ula / tula. The order-1.5 noise
// sqrt(2 gamma) sigma_gamma(x) Z can be realized three interchangeable ways;
// all agree in law.
#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hola/errors.hpp"
#include "hola/linalg.hpp"
#include "hola/potentials.hpp"
#include "hola/rng.hpp"
#include "hola/taming.hpp"

namespace hola {

enum class Scheme { hola, hola_lipschitz, ula, tula };
enum class NoiseMode { two_noise, matrix_sqrt, correlated_pair };

inline std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::hola: return "hola";
    case Scheme::hola_lipschitz: return "hola_lipschitz";
    case Scheme::ula: return "ula";
    case Scheme::tula: return "tula";
  }
  return "?";
}
inline std::string to_string(NoiseMode m) {
  switch (m) {
    case NoiseMode::two_noise: return "two_noise";
    case NoiseMode::matrix_sqrt: return "matrix_sqrt";
    case NoiseMode::correlated_pair: return "correlated_pair";
  }
  return "?";
}
inline Scheme scheme_from_string(const std::string& s) {
  if (s == "hola") return Scheme::hola;
  if (s == "hola_lipschitz") return Scheme::hola_lipschitz;
  if (s == "ula") return Scheme::ula;
  if (s == "tula") return Scheme::tula;
  throw ArgumentError("unknown scheme '" + s + "' (expected hola|hola_lipschitz|ula|tula)");
}
inline NoiseMode noise_mode_from_string(const std::string& s) {
  if (s == "two_noise") return NoiseMode::two_noise;
  if (s == "matrix_sqrt") return NoiseMode::matrix_sqrt;
  if (s == "correlated_pair") return NoiseMode::correlated_pair;
  throw ArgumentError("unknown noise_mode '" + s +
                      "' (expected two_noise|matrix_sqrt|correlated_pair)");
}

// Any coordinate beyond this radius (or non-finite) counts as divergence.
inline constexpr double kDivergenceRadius = 1e12;

// Proven admissible step-size ceiling for the untamed scheme on an (m, L1) target.
inline double admissible_gamma_max(double m, double L1) {
  const double mt = m * L1 / (m + L1);
  return std::min(1.0 / mt, 8.0 * mt * mt / (m * (2.0 * L1 * L1 + 7.0 * mt * L1)));
}

struct SamplerConfig {
  Scheme scheme = Scheme::hola;
  double gamma = 0.1;
  std::int64_t n_steps = 0;
  std::int64_t burn_in = 0;
  std::int64_t thin = 1;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;  // chain index; selects the RNG stream
  NoiseMode noise_mode = NoiseMode::two_noise;
  Eigen::VectorXd initial_point;

  // Throws on violated invariants. Returns a warning (not an error) when the
  // untamed scheme is asked to run beyond the proven step-size range, since
  // experiments deliberately probe past it.
  std::optional<std::string> validate(const TargetModel& model) const {
    check_gamma(gamma);
    if (n_steps < 1) throw ArgumentError("config: n_steps must be >= 1");
    if (burn_in < 0 || burn_in >= n_steps)
      throw ArgumentError("config: burn_in must satisfy 0 <= burn_in < n_steps");
    if (thin < 1) throw ArgumentError("config: thin must be >= 1");
    model.check_point(initial_point);
    if (scheme == Scheme::hola_lipschitz) {
      if (auto lip = model.lipschitz()) {
        const double gmax = admissible_gamma_max(lip->m, lip->L1);
        if (gamma >= gmax)
          return "warning: gamma = " + std::to_string(gamma) +
                 " is outside the proven step-size range (0, " + std::to_string(gmax) +
                 ") for scheme hola_lipschitz";
      }
    }
    return std::nullopt;
  }
};

struct ChainState {
  Eigen::VectorXd x;
  std::int64_t step_index = 0;
  RandomStream rng{0, 0};
  bool diverged = false;
};

// sigma_gamma^2 = I - gamma H + (gamma^2/3) H^2. For a tamed Hessian
// (|gamma H| <= 1) every eigenvalue is at least 1/3; over all real t the
// quadratic 1 - t + t^2/3 stays above 1/4, so losing positive definiteness
// means the inputs were already non-finite.
inline Eigen::MatrixXd sigma_squared(const Eigen::MatrixXd& hess, double gamma) {
  check_gamma(gamma);
  const Eigen::Index d = hess.rows();
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Identity(d, d) - gamma * hess +
                       (gamma * gamma / 3.0) * (hess * hess);
  if (!s2.allFinite() || min_eigenvalue_sym(s2) <= 0.0)
    throw PreconditionError(
        "sigma_squared: result is not positive definite; the step-size bound gamma*|H| <= 1 "
        "(gamma*|H| = " +
        std::to_string(gamma * spectral_norm_sym(hess)) + ") was violated with non-finite input");
  return s2;
}

// Realizes sigma_gamma(x) Z with two independent standard normals:
// (I - (gamma/2) H) xi + (sqrt(3)/6) gamma H xi~. Its covariance matches
// sigma_squared exactly: (I - gamma H/2)^2 + (gamma^2/12) H^2 = sigma^2.
inline Eigen::VectorXd noise_two(const Eigen::MatrixXd& hess, double gamma, RandomStream& rng) {
  check_gamma(gamma);
  const Eigen::Index d = hess.rows();
  Eigen::VectorXd xi(d), xi2(d);
  rng.fill_normal({xi.data(), static_cast<std::size_t>(d)});
  rng.fill_normal({xi2.data(), static_cast<std::size_t>(d)});
  return xi + hess * ((std::sqrt(3.0) / 6.0) * gamma * xi2 - 0.5 * gamma * xi);
}

// The correlated pair (Zbar, Ztilde) of the Ito-Taylor form: Zbar standard
// normal, Ztilde = gamma^{3/2} (Zbar/2 + W/(2 sqrt 3)) with W independent, so
// Cov(Ztilde) = (gamma^3/3) I and E[sqrt(gamma) Zbar Ztilde^T] = (gamma^2/2) I.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> correlated_pair(double gamma, Eigen::Index d,
                                                                   RandomStream& rng) {
  check_gamma(gamma);
  Eigen::VectorXd zbar(d), w(d);
  rng.fill_normal({zbar.data(), static_cast<std::size_t>(d)});
  rng.fill_normal({w.data(), static_cast<std::size_t>(d)});
  const double g32 = gamma * std::sqrt(gamma);
  Eigen::VectorXd ztilde = g32 * (0.5 * zbar + (0.5 / std::sqrt(3.0)) * w);
  return {std::move(zbar), std::move(ztilde)};
}

// Drift-only update map (noise forced to zero); used by tests and diagnostics.
inline Eigen::VectorXd deterministic_map(const TargetModel& model, const Eigen::VectorXd& x,
                                         double gamma, Scheme scheme) {
  check_gamma(gamma);
  const DerivativeStack s = model.evaluate(x);
  switch (scheme) {
    case Scheme::hola: {
      const TamedDrift t = tame(s, x, gamma);
      return x + gamma * (-t.grad_t + 0.5 * gamma * (t.hess_grad_t - t.vec_lap_t));
    }
    case Scheme::hola_lipschitz:
      return x + gamma * (-s.grad + 0.5 * gamma * (s.hess_grad - s.vec_lap_grad));
    case Scheme::ula:
      return x - gamma * s.grad;
    case Scheme::tula:
      return x - gamma * s.grad / (1.0 + gamma * s.grad.norm());
  }
  throw ArgumentError("unknown scheme");
}

// Preallocated one-step kernel; the chain drivers and the one-step wrappers
// share it. step() reports false once the iterate leaves the finite region.
class Stepper {
 public:
  Stepper(const TargetModel& model, Scheme scheme, double gamma, NoiseMode mode)
      : model_(model), scheme_(scheme), gamma_(gamma), mode_(mode), d_(model.dim()) {
    check_gamma(gamma);
    stack_.resize(d_);
    td_.resize(d_);
    xi_.resize(d_);
    xi2_.resize(d_);
    tmp_.resize(d_);
  }

  bool step(Eigen::VectorXd& x, RandomStream& rng) {
    model_.evaluate_into(x, stack_);
    const double root2g = std::sqrt(2.0 * gamma_);
    switch (scheme_) {
      case Scheme::hola: {
        tame_into(stack_, x, gamma_, td_);
        x += gamma_ * (-td_.grad_t + 0.5 * gamma_ * (td_.hess_grad_t - td_.vec_lap_t));
        add_order15_noise(x, td_.hess_t, root2g, rng);
        break;
      }
      case Scheme::hola_lipschitz: {
        x += gamma_ * (-stack_.grad + 0.5 * gamma_ * (stack_.hess_grad - stack_.vec_lap_grad));
        add_order15_noise(x, stack_.hess, root2g, rng);
        break;
      }
      case Scheme::ula: {
        fill(xi_, rng);
        x += -gamma_ * stack_.grad + root2g * xi_;
        break;
      }
      case Scheme::tula: {
        fill(xi_, rng);
        x += -gamma_ * stack_.grad / (1.0 + gamma_ * stack_.grad.norm()) + root2g * xi_;
        break;
      }
    }
    return x.allFinite() && x.squaredNorm() <= kDivergenceRadius * kDivergenceRadius;
  }

 private:
  void fill(Eigen::VectorXd& v, RandomStream& rng) {
    rng.fill_normal({v.data(), static_cast<std::size_t>(d_)});
  }

  void add_order15_noise(Eigen::VectorXd& x, const Eigen::MatrixXd& hess, double root2g,
                         RandomStream& rng) {
    switch (mode_) {
      case NoiseMode::two_noise:
        fill(xi_, rng);
        fill(xi2_, rng);
        tmp_ = (std::sqrt(3.0) / 6.0) * gamma_ * xi2_ - 0.5 * gamma_ * xi_;
        x += root2g * xi_;
        x.noalias() += root2g * (hess * tmp_);
        break;
      case NoiseMode::matrix_sqrt: {
        Eigen::MatrixXd s2 = sigma_squared_unchecked(hess);
        if (!s2.allFinite())
          throw PreconditionError("sigma_squared: non-finite; step-size bound violated");
        fill(xi_, rng);
        x.noalias() += root2g * (matrix_sqrt_spd(s2) * xi_);
        break;
      }
      case NoiseMode::correlated_pair:
        fill(xi_, rng);   // Zbar
        fill(xi2_, rng);  // W
        tmp_ = (gamma_ * std::sqrt(gamma_)) * (0.5 * xi_ + (0.5 / std::sqrt(3.0)) * xi2_);
        x += root2g * xi_;
        x.noalias() -= std::sqrt(2.0) * (hess * tmp_);
        break;
    }
  }

  Eigen::MatrixXd sigma_squared_unchecked(const Eigen::MatrixXd& hess) const {
    return Eigen::MatrixXd::Identity(d_, d_) - gamma_ * hess +
           (gamma_ * gamma_ / 3.0) * (hess * hess);
  }

  const TargetModel& model_;
  Scheme scheme_;
  double gamma_;
  NoiseMode mode_;
  Eigen::Index d_;
  DerivativeStack stack_;
  TamedDrift td_;
  Eigen::VectorXd xi_, xi2_, tmp_;
};

namespace detail {
inline ChainState one_step(const ChainState& state, const TargetModel& model, double gamma,
                           Scheme scheme, NoiseMode mode, RandomStream& rng) {
  model.check_point(state.x);
  Stepper stepper(model, scheme, gamma, mode);
  ChainState next = state;
  next.rng = rng;
  next.diverged = !stepper.step(next.x, next.rng);
  next.step_index = state.step_index + 1;
  rng = next.rng;
  return next;
}
}  // namespace detail

inline ChainState hola_step(const ChainState& state, const TargetModel& model, double gamma,
                            NoiseMode mode, RandomStream& rng) {
  return detail::one_step(state, model, gamma, Scheme::hola, mode, rng);
}
inline ChainState hola_lipschitz_step(const ChainState& state, const TargetModel& model,
                                      double gamma, NoiseMode mode, RandomStream& rng) {
  return detail::one_step(state, model, gamma, Scheme::hola_lipschitz, mode, rng);
}
inline ChainState ula_step(const ChainState& state, const TargetModel& model, double gamma,
                           RandomStream& rng) {
  return detail::one_step(state, model, gamma, Scheme::ula, NoiseMode::two_noise, rng);
}
inline ChainState tula_step(const ChainState& state, const TargetModel& model, double gamma,
                            RandomStream& rng) {
  return detail::one_step(state, model, gamma, Scheme::tula, NoiseMode::two_noise, rng);
}

struct ChainOutput {
  Eigen::MatrixXd samples;  // retained iterates, one per row
  std::vector<std::int64_t> steps;
  bool diverged = false;
  std::int64_t divergence_step = -1;
  double seconds = 0.0;
};

// Deterministic given (seed, stream_id, config, model): retained samples are
// bit-identical across runs. Divergence terminates the chain early.
inline ChainOutput run_chain(const SamplerConfig& cfg, const TargetModel& model) {
  if (auto warning = cfg.validate(model)) std::cerr << *warning << "\n";
  const auto t0 = std::chrono::steady_clock::now();

  const std::int64_t max_retained = (cfg.n_steps - cfg.burn_in + cfg.thin - 1) / cfg.thin;
  ChainOutput out;
  out.samples.resize(max_retained, model.dim());
  out.steps.reserve(max_retained);

  Stepper stepper(model, cfg.scheme, cfg.gamma, cfg.noise_mode);
  RandomStream rng(cfg.seed, cfg.stream_id);
  Eigen::VectorXd x = cfg.initial_point;
  std::int64_t retained = 0;
  for (std::int64_t n = 1; n <= cfg.n_steps; ++n) {
    const bool ok = stepper.step(x, rng);
    if (!ok) {
      out.diverged = true;
      out.divergence_step = n;
      break;
    }
    if (n > cfg.burn_in && (n - cfg.burn_in - 1) % cfg.thin == 0) {
      out.samples.row(retained++) = x;
      out.steps.push_back(n);
    }
  }
  out.samples.conservativeResize(retained, Eigen::NoChange);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace hola
