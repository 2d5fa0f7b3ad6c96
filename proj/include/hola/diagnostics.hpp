// Distance estimators and their closed-form oracles: the Bures formula for
// Gaussian W2, exact 1-D quantile coupling, a histogram TV estimator, the
// discrete-Lyapunov stationary variance of the linear (Gaussian-target)
// recursions, moment envelopes, and log-log rate fitting.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "hola/constants.hpp"
#include "hola/errors.hpp"
#include "hola/linalg.hpp"
#include "hola/potentials.hpp"
#include "hola/samplers.hpp"

namespace hola {

// W2 between N(m1, S1) and N(m2, S2):
// sqrt(|m1-m2|^2 + tr(S1 + S2 - 2 (S2^{1/2} S1 S2^{1/2})^{1/2})).
inline double gaussian_w2(const Eigen::VectorXd& m1, const Eigen::MatrixXd& s1,
                          const Eigen::VectorXd& m2, const Eigen::MatrixXd& s2) {
  if (m1.size() != m2.size() || s1.rows() != m1.size() || s2.rows() != m2.size())
    throw ArgumentError("gaussian_w2: dimension mismatch");
  auto psd_sqrt = [](const Eigen::MatrixXd& s) {
    if (!s.isApprox(s.transpose(), 1e-10)) throw ArgumentError("gaussian_w2: covariance not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    if (es.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff()))
      throw ArgumentError("gaussian_w2: covariance not positive semidefinite");
    return Eigen::MatrixXd(es.eigenvectors() *
                           es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                           es.eigenvectors().transpose());
  };
  const Eigen::MatrixXd r2 = psd_sqrt(s2);
  const Eigen::MatrixXd cross = psd_sqrt(r2 * s1 * r2);
  const double tr = (s1 + s2 - 2.0 * cross).trace();
  return std::sqrt((m1 - m2).squaredNorm() + std::max(tr, 0.0));
}

// Exact 1-D quantile coupling against a target quantile function:
// sqrt(mean_k (x_(k) - Q((k - 1/2)/N))^2). Samples must be sorted.
template <class Quantile>
double w2_1d(const std::vector<double>& sorted_samples, Quantile&& target_quantile) {
  if (sorted_samples.empty()) throw ArgumentError("w2_1d: no samples");
  const double n = static_cast<double>(sorted_samples.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < sorted_samples.size(); ++k) {
    const double diff = sorted_samples[k] - target_quantile((static_cast<double>(k) + 0.5) / n);
    acc += diff * diff;
  }
  return std::sqrt(acc / n);
}

// Histogram total variation core: interior bins plus the two tail cells, so
// disjoint supports score 1.
class TvHistogram {
 public:
  TvHistogram(int n_bins, double lo, double hi) : lo_(lo), hi_(hi), counts_(n_bins + 2, 0) {
    if (n_bins < 10) throw ArgumentError("tv_1d: need at least 10 bins");
    if (!(hi > lo)) throw ArgumentError("tv_1d: empty range");
    width_ = (hi - lo) / n_bins;
  }

  void add(double x) {
    ++total_;
    if (x < lo_) {
      ++counts_.front();
    } else if (x >= hi_) {
      ++counts_.back();
    } else {
      const auto b = static_cast<std::size_t>((x - lo_) / width_);
      ++counts_[std::min(b, counts_.size() - 3) + 1];
    }
  }

  void merge(const TvHistogram& other) {
    if (other.counts_.size() != counts_.size() || other.lo_ != lo_ || other.hi_ != hi_)
      throw ArgumentError("tv_1d: merging incompatible histograms");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    total_ += other.total_;
  }

  template <class Cdf>
  double distance(Cdf&& target_cdf) const {
    if (total_ == 0) throw ArgumentError("tv_1d: no samples");
    const int nb = static_cast<int>(counts_.size()) - 2;
    double acc = std::abs(static_cast<double>(counts_.front()) / total_ - target_cdf(lo_));
    double prev = target_cdf(lo_);
    for (int b = 0; b < nb; ++b) {
      const double next = target_cdf(lo_ + (b + 1) * width_);
      acc += std::abs(static_cast<double>(counts_[b + 1]) / total_ - (next - prev));
      prev = next;
    }
    acc += std::abs(static_cast<double>(counts_.back()) / total_ - (1.0 - prev));
    return std::min(0.5 * acc, 1.0);  // contract: a value in [0, 1]
  }

 private:
  double lo_, hi_, width_;
  std::vector<std::int64_t> counts_;
  std::int64_t total_ = 0;
};

template <class Cdf>
double tv_1d(const std::vector<double>& samples, Cdf&& target_cdf, int n_bins, double lo,
             double hi) {
  TvHistogram hist(n_bins, lo, hi);
  for (double x : samples) hist.add(x);
  return hist.distance(target_cdf);
}

// Stationary variance of the linear recursion x' = B x + sqrt(2 gamma) sigma Z
// on the 1-D Gaussian target U = a x^2 / 2: the scalar discrete Lyapunov fixed
// point Sigma = B^2 Sigma + 2 gamma sigma^2. Exact oracle, no sampling.
inline double stationary_variance_oracle(double a, double gamma, Scheme scheme) {
  if (!(a > 0.0)) throw ArgumentError("stationary_variance_oracle: curvature must be positive");
  check_gamma(gamma);
  double b, s2;
  switch (scheme) {
    case Scheme::ula:
      b = 1.0 - gamma * a;
      s2 = 1.0;
      break;
    case Scheme::hola_lipschitz:
      b = 1.0 - gamma * a + gamma * gamma * a * a / 2.0;
      s2 = 1.0 - gamma * a + gamma * gamma * a * a / 3.0;
      break;
    default:
      throw ArgumentError("stationary_variance_oracle: scheme must be ula or hola_lipschitz");
  }
  if (std::abs(b) >= 1.0)
    throw StepSizeError("stationary_variance_oracle: |B| = " + std::to_string(std::abs(b)) +
                        " >= 1, the recursion does not contract at this step size");
  return 2.0 * gamma * s2 / (1.0 - b * b);
}

// Least-squares line through (log gamma, log error); the slope is the
// empirical convergence order.
struct RateFit {
  std::vector<std::pair<double, double>> points;  // (gamma, error)
  double slope = 0.0;
  double intercept = 0.0;  // log-constant
  double r2 = 0.0;
};

inline RateFit fit_rate(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw ArgumentError("fit_rate: need at least 3 points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].first > 0.0)) throw ArgumentError("fit_rate: gamma values must be positive");
    if (!(points[i].second > 0.0)) throw ArgumentError("fit_rate: errors must be positive");
    for (std::size_t j = i + 1; j < points.size(); ++j)
      if (points[i].first == points[j].first)
        throw ArgumentError("fit_rate: gamma values must be distinct");
  }
  const double n = static_cast<double>(points.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (const auto& [g, e] : points) {
    const double x = std::log(g), y = std::log(e);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  RateFit fit;
  fit.points = points;
  const double vxx = sxx - sx * sx / n;
  const double vxy = sxy - sx * sy / n;
  const double vyy = syy - sy * sy / n;
  fit.slope = vxy / vxx;
  fit.intercept = (sy - fit.slope * sx) / n;
  fit.r2 = vyy > 0.0 ? vxy * vxy / (vxx * vyy) : 1.0;
  return fit;
}

// Delete-one jackknife standard error over contiguous blocks (autocorrelation
// robust for block length >> mixing time). `stat` maps a sample range mean...
// here: statistic computed on the retained values with one block removed.
inline double jackknife_se(const std::vector<double>& values,
                           const std::function<double(const std::vector<double>&)>& stat,
                           int n_blocks = 20) {
  if (values.size() < static_cast<std::size_t>(2 * n_blocks))
    throw ArgumentError("jackknife_se: too few values for the requested blocks");
  const std::size_t block = values.size() / n_blocks;
  std::vector<double> leave_out;
  std::vector<double> reps(n_blocks);
  for (int b = 0; b < n_blocks; ++b) {
    leave_out.clear();
    leave_out.reserve(values.size() - block);
    const std::size_t lo = b * block;
    const std::size_t hi = (b == n_blocks - 1) ? values.size() : lo + block;
    leave_out.insert(leave_out.end(), values.begin(), values.begin() + lo);
    leave_out.insert(leave_out.end(), values.begin() + hi, values.end());
    reps[b] = stat(leave_out);
  }
  const double mean = std::accumulate(reps.begin(), reps.end(), 0.0) / n_blocks;
  double ss = 0.0;
  for (double r : reps) ss += (r - mean) * (r - mean);
  return std::sqrt(ss * (n_blocks - 1.0) / n_blocks);
}

// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value (Stephens'
// small-sample correction of the Kolmogorov distribution).
struct KsResult {
  double statistic = 0.0;
  double p_value = 0.0;
};

inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw ArgumentError("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  const double lambda = (ne + 0.12 + 0.11 / ne) * d;
  double p = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
    p += term;
    if (std::abs(term) < 1e-12) break;
    sign = -sign;
  }
  return {d, std::clamp(2.0 * p, 0.0, 1.0)};
}

// CDF and quantile of a 1-D density proportional to exp(-U) by quadrature.
// The normalizer uses adaptive Simpson to 1e-10 relative tolerance; CDF
// values come from composite Simpson on a fine grid and the quantile inverts
// the grid with a Newton polish.
class Quadrature1D {
 public:
  Quadrature1D(std::function<double(double)> potential, double lo, double hi, int grid = 8192)
      : u_(std::move(potential)), lo_(lo), hi_(hi) {
    if (!(hi > lo)) throw ArgumentError("quadrature: empty support");
    // shift by the minimum of U on the grid so exp stays in range
    xs_.resize(grid + 1);
    double umin = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= grid; ++i) {
      xs_[i] = lo + (hi - lo) * i / grid;
      umin = std::min(umin, u_(xs_[i]));
    }
    ushift_ = umin;
    z_ = adaptive_simpson(lo_, hi_, 1e-12);
    cdf_.assign(grid + 1, 0.0);
    for (int i = 1; i <= grid; ++i) {
      const double a = xs_[i - 1], b = xs_[i], mid = 0.5 * (a + b);
      cdf_[i] = cdf_[i - 1] + (b - a) / 6.0 * (density(a) + 4.0 * density(mid) + density(b));
    }
    norm_ = cdf_.back();
    for (double& v : cdf_) v /= norm_;
  }

  double pdf(double x) const {
    if (x <= lo_ || x >= hi_) return 0.0;
    return density(x) / norm_;
  }

  double cdf(double x) const {
    if (x <= lo_) return 0.0;
    if (x >= hi_) return 1.0;
    const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - xs_.begin()) - 1;
    const double a = xs_[i], mid = 0.5 * (a + x);
    return cdf_[i] + (x - a) / 6.0 * (density(a) + 4.0 * density(mid) + density(x)) / norm_;
  }

  double quantile(double p) const {
    if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("quantile: p must lie in [0, 1]");
    if (p <= 0.0) return lo_;
    if (p >= 1.0) return hi_;
    const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), p);
    std::size_t i = static_cast<std::size_t>(it - cdf_.begin());
    if (i == 0) i = 1;
    return invert_in_cell(i, p);
  }

  // Stateful inverse-CDF for nondecreasing p sequences (sorted-sample
  // couplings); skips the binary search by advancing a cursor.
  class MonotoneQuantile {
   public:
    explicit MonotoneQuantile(const Quadrature1D& q) : q_(q) {}
    double operator()(double p) {
      if (p <= 0.0) return q_.lo_;
      if (p >= 1.0) return q_.hi_;
      while (i_ < q_.cdf_.size() - 1 && q_.cdf_[i_] < p) ++i_;
      return q_.invert_in_cell(std::max<std::size_t>(i_, 1), p);
    }

   private:
    const Quadrature1D& q_;
    std::size_t i_ = 1;
  };
  MonotoneQuantile monotone_quantile() const { return MonotoneQuantile(*this); }

  // integral of exp(-U) over the support, with the grid/adaptive routes
  // agreeing to the quadrature tolerance
  double normalizer() const { return z_ * std::exp(-ushift_); }
  double normalizer_grid() const { return norm_ * std::exp(-ushift_); }

 private:
  double density(double x) const { return std::exp(-(u_(x) - ushift_)); }

  // Newton inversion inside grid cell i (cdf_[i-1] < p <= cdf_[i]) using the
  // local Simpson CDF; two iterations from the linear-interpolation start
  // leave errors far below the grid resolution.
  double invert_in_cell(std::size_t i, double p) const {
    const double a = xs_[i - 1], b = xs_[i];
    const double c0 = cdf_[i - 1], c1 = cdf_[i];
    const double fa = density(a);
    double x = c1 > c0 ? a + (b - a) * (p - c0) / (c1 - c0) : 0.5 * (a + b);
    for (int iter = 0; iter < 2; ++iter) {
      const double fx = density(x);
      const double local =
          (x - a) / 6.0 * (fa + 4.0 * density(0.5 * (a + x)) + fx) / norm_;
      const double g = fx / norm_;
      if (g <= 0.0) break;
      const double step = (c0 + local - p) / g;
      x = std::clamp(x - step, a, b);
      if (std::abs(step) < 1e-15 * (1.0 + std::abs(x))) break;
    }
    return x;
  }

  double adaptive_simpson(double a, double b, double tol) const {
    const double m = 0.5 * (a + b);
    const double fa = density(a), fb = density(b), fm = density(m);
    return simpson_rec(a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), tol, 24);
  }
  static double simpson(double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  }
  double simpson_rec(double a, double b, double fa, double fm, double fb, double whole, double tol,
                     int depth) const {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = density(lm), frm = density(rm);
    const double left = simpson(a, m, fa, flm, fm), right = simpson(m, b, fm, frm, fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol * std::max(1.0, std::abs(whole)))
      return left + right + (left + right - whole) / 15.0;
    return simpson_rec(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_rec(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
  }

  std::function<double(double)> u_;
  double lo_, hi_, ushift_ = 0.0, z_ = 1.0, norm_ = 1.0;
  std::vector<double> xs_, cdf_;
};

// Empirical running moments E|X_n - x*|^2, E|X_n - x*|^4 against the
// theoretical envelopes (1 - m~ g)^{n+1} |x0 - x*|^2 + q1/m~ and
// (1 - m~ g / 8)^{n+1} |x0 - x*|^4 + 8 q2 / m~.
struct MomentEnvelope {
  std::vector<std::int64_t> n_grid;
  std::vector<double> empirical_m2, empirical_m4;
  std::vector<double> bound_m2, bound_m4;

  bool within_bounds() const {
    for (std::size_t i = 0; i < n_grid.size(); ++i)
      if (empirical_m2[i] > bound_m2[i] || empirical_m4[i] > bound_m4[i]) return false;
    return true;
  }
};

inline MomentEnvelope moment_envelope(const TargetModel& model, const LipschitzConstants& consts,
                                      double gamma, std::int64_t n_steps, int n_replicas,
                                      std::int64_t log_every, const Eigen::VectorXd& x0,
                                      std::uint64_t seed, Scheme scheme = Scheme::hola_lipschitz) {
  check_gamma_admissible(consts, gamma);
  const auto hint = model.minimizer_hint();
  if (!hint) throw ArgumentError("moment_envelope: model must expose its minimizer");
  if (n_replicas < 1 || n_steps < 1 || log_every < 1 || log_every > n_steps)
    throw ArgumentError("moment_envelope: bad replication/logging parameters");
  const Eigen::VectorXd& xstar = *hint;
  const double r0_2 = (x0 - xstar).squaredNorm();

  MomentEnvelope env;
  const std::int64_t n_logs = n_steps / log_every;
  env.n_grid.resize(n_logs);
  env.empirical_m2.assign(n_logs, 0.0);
  env.empirical_m4.assign(n_logs, 0.0);
  env.bound_m2.resize(n_logs);
  env.bound_m4.resize(n_logs);

  for (int r = 0; r < n_replicas; ++r) {
    Stepper stepper(model, scheme, gamma, NoiseMode::two_noise);
    RandomStream rng(seed, static_cast<std::uint64_t>(r));
    Eigen::VectorXd x = x0;
    std::int64_t log_idx = 0;
    for (std::int64_t n = 1; n <= n_steps; ++n) {
      if (!stepper.step(x, rng))
        throw DivergenceError("moment_envelope: chain diverged at step " + std::to_string(n));
      if (n % log_every == 0) {
        const double r2 = (x - xstar).squaredNorm();
        env.empirical_m2[log_idx] += r2 / n_replicas;
        env.empirical_m4[log_idx] += r2 * r2 / n_replicas;
        ++log_idx;
      }
    }
  }
  const double mt = consts.m_tilde;
  for (std::int64_t i = 0; i < n_logs; ++i) {
    const std::int64_t n = (i + 1) * log_every;
    env.n_grid[i] = n;
    env.bound_m2[i] = std::pow(1.0 - mt * gamma, static_cast<double>(n + 1)) * r0_2 +
                      consts.q1 / mt;
    env.bound_m4[i] = std::pow(1.0 - mt * gamma / 8.0, static_cast<double>(n + 1)) * r0_2 * r0_2 +
                      8.0 * consts.q2 / mt;
  }
  return env;
}

}  // namespace hola
