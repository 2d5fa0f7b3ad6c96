// Rate-sweep harness: runs replicated chains over a step-size grid, measures
// the stationary error under one of the supported metrics, and fits the
// log-log slope. Sampling mode pools replicas per grid point (replica r uses
// RNG stream r, so points share common random numbers); oracle mode uses the
// closed-form stationary variance of the linear Gaussian recursion and has no
// sampling noise at all.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "hola/diagnostics.hpp"
#include "hola/errors.hpp"
#include "hola/potentials.hpp"
#include "hola/samplers.hpp"

namespace hola {

enum class RateMetric { w2_gaussian, w2_1d, tv_1d };
enum class RateMode { sampling, oracle };

inline std::string to_string(RateMetric m) {
  switch (m) {
    case RateMetric::w2_gaussian: return "w2_gaussian";
    case RateMetric::w2_1d: return "w2_1d";
    case RateMetric::tv_1d: return "tv_1d";
  }
  return "?";
}
inline RateMetric rate_metric_from_string(const std::string& s) {
  if (s == "w2_gaussian") return RateMetric::w2_gaussian;
  if (s == "w2_1d") return RateMetric::w2_1d;
  if (s == "tv_1d") return RateMetric::tv_1d;
  throw ArgumentError("unknown metric '" + s + "' (expected w2_gaussian|w2_1d|tv_1d)");
}

struct RateSweepConfig {
  Scheme scheme = Scheme::hola;
  std::vector<double> gammas;
  RateMetric metric = RateMetric::w2_1d;
  RateMode mode = RateMode::sampling;
  std::int64_t steps = 1000000;  // chain length per replica and grid point
  int replicas = 1;
  std::int64_t burn_in = -1;  // < 0: use steps / 10
  std::int64_t thin = 1;
  std::uint64_t seed = 0;
  int n_bins = 100;
  double range_lo = 0.0, range_hi = 0.0;  // equal: derive from target quantiles
  int threads = 1;
  Eigen::VectorXd initial_point;  // empty: start at the minimizer hint or zero
};

struct RatePoint {
  double gamma = 0.0;
  double error = 0.0;
  double std_error = 0.0;  // replicate scatter of the per-replica estimate
};

struct RateReport {
  std::vector<RatePoint> points;
  RateFit fit;
};

// 1-D support on which exp(-U) carries all but ~1e-26 of its mass.
inline std::pair<double, double> density_support(const TargetModel& model) {
  if (model.dim() != 1) throw ArgumentError("density_support: 1-D targets only");
  Eigen::VectorXd c(1);
  c(0) = model.minimizer_hint() ? (*model.minimizer_hint())(0) : 0.0;
  const double u0 = model.evaluate(c).u;
  double r = 1.0;
  Eigen::VectorXd p(1);
  for (int i = 0; i < 60; ++i) {
    p(0) = c(0) - r;
    const double ul = model.evaluate(p).u;
    p(0) = c(0) + r;
    const double ur = model.evaluate(p).u;
    if (std::min(ul, ur) - u0 >= 60.0) return {c(0) - r, c(0) + r};
    r *= 2.0;
  }
  throw ArgumentError("density_support: target mass does not concentrate");
}

inline Quadrature1D quadrature_for(const TargetModel& model) {
  auto [lo, hi] = density_support(model);
  return Quadrature1D([&model](double x) { return model.evaluate(Eigen::VectorXd::Constant(1, x)).u; },
                      lo, hi);
}

namespace detail {

struct ReplicaResult {
  std::vector<double> kept;   // thinned samples (w2 metrics)
  TvHistogram hist{10, 0.0, 1.0};
  double replica_error = 0.0;
};

inline double oracle_error(const TargetModel& model, Scheme scheme, double gamma) {
  const auto* gauss = dynamic_cast<const GaussianModel*>(&model);
  if (gauss == nullptr || gauss->dim() != 1)
    throw ArgumentError("oracle mode requires a 1-D gaussian target");
  const double a = gauss->precision()(0, 0);
  return std::abs(stationary_variance_oracle(a, gamma, scheme) - 1.0 / a);
}

}  // namespace detail

inline RateReport run_rate_sweep(const TargetModel& model, const RateSweepConfig& cfg) {
  if (cfg.gammas.size() < 3) throw ArgumentError("rate sweep: need at least 3 gamma values");
  RateReport report;

  if (cfg.mode == RateMode::oracle) {
    std::vector<std::pair<double, double>> pts;
    for (double g : cfg.gammas) {
      const double err = detail::oracle_error(model, cfg.scheme, g);
      report.points.push_back({g, err, 0.0});
      pts.emplace_back(g, err);
    }
    report.fit = fit_rate(pts);
    return report;
  }

  if (cfg.replicas < 1) throw ArgumentError("rate sweep: replicas must be >= 1");
  const std::int64_t burn = cfg.burn_in >= 0 ? cfg.burn_in : cfg.steps / 10;
  if (burn >= cfg.steps) throw ArgumentError("rate sweep: burn-in leaves no samples");
  const Eigen::Index d = model.dim();

  const bool needs_1d = cfg.metric != RateMetric::w2_gaussian;
  if (needs_1d && d != 1)
    throw ArgumentError("metric " + to_string(cfg.metric) + " requires a 1-D target");

  std::unique_ptr<Quadrature1D> quad;
  double lo = cfg.range_lo, hi = cfg.range_hi;
  if (needs_1d) {
    quad = std::make_unique<Quadrature1D>(quadrature_for(model));
    if (!(hi > lo)) {
      lo = quad->quantile(5e-4);
      hi = quad->quantile(1.0 - 5e-4);
    }
  }

  const GaussianModel* gauss = dynamic_cast<const GaussianModel*>(&model);
  if (cfg.metric == RateMetric::w2_gaussian && gauss == nullptr)
    throw ArgumentError("metric w2_gaussian requires a gaussian target");

  Eigen::VectorXd x0 = cfg.initial_point;
  if (x0.size() == 0)
    x0 = model.minimizer_hint() ? *model.minimizer_hint() : Eigen::VectorXd::Zero(d);

  const std::int64_t kept_per_replica = (cfg.steps - burn + cfg.thin - 1) / cfg.thin;

  std::vector<std::pair<double, double>> fit_points;
  for (double gamma : cfg.gammas) {
    std::vector<detail::ReplicaResult> results(cfg.replicas);
    const bool use_hist = cfg.metric == RateMetric::tv_1d;

    std::atomic<int> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    auto worker = [&]() {
      try {
        for (int r = next.fetch_add(1); r < cfg.replicas; r = next.fetch_add(1)) {
          detail::ReplicaResult& res = results[r];
          if (use_hist) res.hist = TvHistogram(cfg.n_bins, lo, hi);
          else res.kept.reserve(kept_per_replica * d);
          Stepper stepper(model, cfg.scheme, gamma, NoiseMode::two_noise);
          RandomStream rng(cfg.seed, static_cast<std::uint64_t>(r));
          Eigen::VectorXd x = x0;
          for (std::int64_t n = 1; n <= cfg.steps; ++n) {
            if (!stepper.step(x, rng))
              throw DivergenceError("rate sweep: chain diverged (scheme " +
                                      to_string(cfg.scheme) + ", gamma " + std::to_string(gamma) +
                                      ", step " + std::to_string(n) + ")");
            if (n <= burn) continue;
            if (use_hist) {
              res.hist.add(x(0));
            } else if ((n - burn - 1) % cfg.thin == 0) {
              for (Eigen::Index k = 0; k < d; ++k) res.kept.push_back(x(k));
            }
          }
          // per-replica estimate for the scatter column
          if (use_hist) {
            res.replica_error = res.hist.distance([&](double t) { return quad->cdf(t); });
          } else if (cfg.metric == RateMetric::w2_1d) {
            std::vector<double> sorted = res.kept;
            std::sort(sorted.begin(), sorted.end());
            res.replica_error = w2_1d(sorted, quad->monotone_quantile());
          } else {
            res.replica_error = 0.0;  // filled after pooling for w2_gaussian
          }
        }
      } catch (...) {
        std::lock_guard<std::mutex> g(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    };
    const int n_threads = std::max(1, std::min(cfg.threads, cfg.replicas));
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);

    double error = 0.0;
    if (use_hist) {
      TvHistogram pooled(cfg.n_bins, lo, hi);
      for (auto& res : results) pooled.merge(res.hist);
      error = pooled.distance([&](double t) { return quad->cdf(t); });
    } else if (cfg.metric == RateMetric::w2_1d) {
      std::vector<double> pooled;
      pooled.reserve(static_cast<std::size_t>(kept_per_replica) * cfg.replicas);
      for (auto& res : results) pooled.insert(pooled.end(), res.kept.begin(), res.kept.end());
      std::sort(pooled.begin(), pooled.end());
      error = w2_1d(pooled, quad->monotone_quantile());
    } else {
      // pooled moments vs the exact gaussian target
      const std::int64_t rows =
          static_cast<std::int64_t>(results.size()) * kept_per_replica;
      Eigen::MatrixXd samples(rows, d);
      std::int64_t at = 0;
      for (auto& res : results)
        for (std::int64_t i = 0; i < kept_per_replica; ++i, ++at)
          for (Eigen::Index k = 0; k < d; ++k) samples(at, k) = res.kept[i * d + k];
      const Eigen::VectorXd mean = samples.colwise().mean();
      const Eigen::MatrixXd centered = samples.rowwise() - mean.transpose();
      const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(rows - 1);
      const Eigen::MatrixXd target_cov = gauss->precision().inverse();
      error = gaussian_w2(mean, cov, gauss->mean(), target_cov);
      for (auto& res : results) {
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
            block(res.kept.data(), kept_per_replica, d);
        const Eigen::VectorXd m = block.colwise().mean();
        const Eigen::MatrixXd c0 = block.rowwise() - m.transpose();
        const Eigen::MatrixXd cv = c0.transpose() * c0 / static_cast<double>(kept_per_replica - 1);
        res.replica_error = gaussian_w2(m, cv, gauss->mean(), target_cov);
      }
    }

    double se = 0.0;
    if (cfg.replicas >= 2) {
      double mean = 0.0;
      for (auto& res : results) mean += res.replica_error;
      mean /= cfg.replicas;
      double ss = 0.0;
      for (auto& res : results) ss += (res.replica_error - mean) * (res.replica_error - mean);
      se = std::sqrt(ss / (cfg.replicas - 1.0) / cfg.replicas);
    }
    report.points.push_back({gamma, error, se});
    fit_points.emplace_back(gamma, error);
  }
  report.fit = fit_rate(fit_points);
  return report;
}

}  // namespace hola
