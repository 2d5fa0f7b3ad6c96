// Target densities pi ~ exp(-U) together with the derivative stack the
// order-1.5 scheme needs: U, grad U, the Hessian, the Hessian-gradient
// product and the vector Laplacian of the gradient. Each concrete model is
// analytic; finite_diff_check certifies the formulas against differences.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hola/errors.hpp"
#include "hola/linalg.hpp"

namespace hola {

struct DerivativeStack {
  double u = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  Eigen::VectorXd hess_grad;     // hess * grad, kept explicit: some models fuse it
  Eigen::VectorXd vec_lap_grad;  // i-th entry: sum_u d^2 (grad U)^(i) / dx_u^2

  void resize(Eigen::Index d) {
    grad.resize(d);
    hess.resize(d, d);
    hess_grad.resize(d);
    vec_lap_grad.resize(d);
  }
};

// Polynomial-growth metadata (rho, K, K1, K2): the constants of the growth
// chain that the taming bounds quote. Models that satisfy the local Hoelder
// condition with beta = 1 expose them.
struct PolynomialGrowth {
  double rho = 2.0;
  double K = 0.0;
  double K1 = 0.0;
  double K2 = 0.0;
};

// Global smoothness moduli (strong convexity m, Lipschitz constants of the
// first/second/third derivative) for models where they exist.
struct LipschitzInfo {
  double m = 0.0;
  double L1 = 0.0;
  double L2 = 0.0;
  double L = 0.0;
};

class TargetModel {
 public:
  virtual ~TargetModel() = default;

  virtual const std::string& name() const = 0;
  virtual Eigen::Index dim() const = 0;

  // Writes all five members of the stack; no allocation when the stack is
  // already sized. Evaluation is pure and reentrant.
  virtual void evaluate_into(const Eigen::VectorXd& x, DerivativeStack& out) const = 0;

  virtual std::optional<Eigen::VectorXd> minimizer_hint() const { return std::nullopt; }
  virtual std::optional<PolynomialGrowth> growth() const { return std::nullopt; }
  virtual std::optional<LipschitzInfo> lipschitz() const { return std::nullopt; }

  DerivativeStack evaluate(const Eigen::VectorXd& x) const {
    check_point(x);
    DerivativeStack s;
    s.resize(dim());
    evaluate_into(x, s);
    return s;
  }

  void check_point(const Eigen::VectorXd& x) const {
    if (x.size() != dim())
      throw ArgumentError(name() + ": point has dimension " + std::to_string(x.size()) +
                          ", model has dimension " + std::to_string(dim()));
    if (!x.allFinite()) throw ArgumentError(name() + ": point has non-finite coordinates");
  }
};

// U(x) = (1/2)(x-mu)^T A (x-mu) with A symmetric positive definite.
class GaussianModel final : public TargetModel {
 public:
  GaussianModel(Eigen::VectorXd mean, Eigen::MatrixXd precision)
      : mean_(std::move(mean)), precision_(std::move(precision)) {
    if (precision_.rows() != precision_.cols() || precision_.rows() != mean_.size())
      throw ArgumentError("gaussian: precision must be square and match the mean dimension");
    if (!precision_.isApprox(precision_.transpose(), 1e-12))
      throw ArgumentError("gaussian: precision must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(precision_);
    if (es.eigenvalues().minCoeff() <= 0.0)
      throw ArgumentError("gaussian: precision must be positive definite");
    lambda_min_ = es.eigenvalues().minCoeff();
    lambda_max_ = es.eigenvalues().maxCoeff();
    double row_max = 0.0;
    for (Eigen::Index i = 0; i < precision_.rows(); ++i)
      row_max = std::max(row_max, precision_.row(i).norm());
    const double k1 = row_max;
    const double k2 = std::max(k1, (precision_ * mean_).cwiseAbs().maxCoeff());
    growth_ = PolynomialGrowth{2.0, 0.0, k1, k2};
  }

  const std::string& name() const override { return name_; }
  Eigen::Index dim() const override { return mean_.size(); }

  void evaluate_into(const Eigen::VectorXd& x, DerivativeStack& out) const override {
    out.grad.noalias() = precision_ * (x - mean_);
    out.u = 0.5 * (x - mean_).dot(out.grad);
    out.hess = precision_;
    out.hess_grad.noalias() = precision_ * out.grad;
    out.vec_lap_grad.setZero();
  }

  std::optional<Eigen::VectorXd> minimizer_hint() const override { return mean_; }
  std::optional<PolynomialGrowth> growth() const override { return growth_; }
  std::optional<LipschitzInfo> lipschitz() const override {
    return LipschitzInfo{lambda_min_, lambda_max_, 0.0, 0.0};
  }

  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& precision() const { return precision_; }

 private:
  std::string name_ = "gaussian";
  Eigen::VectorXd mean_;
  Eigen::MatrixXd precision_;
  double lambda_min_ = 0.0;
  double lambda_max_ = 0.0;
  PolynomialGrowth growth_;
};

// U(x) = |x|^4/4 - |x|^2/2: super-linear gradient, not convex. The standard
// stress target for taming; its growth chain has rho = 2, beta = 1.
class DoubleWellModel final : public TargetModel {
 public:
  explicit DoubleWellModel(Eigen::Index d) : d_(d) {
    if (d < 1) throw ArgumentError("double_well: dimension must be >= 1");
  }

  const std::string& name() const override { return name_; }
  Eigen::Index dim() const override { return d_; }

  void evaluate_into(const Eigen::VectorXd& x, DerivativeStack& out) const override {
    const double r2 = x.squaredNorm();
    out.u = 0.25 * r2 * r2 - 0.5 * r2;
    out.grad = (r2 - 1.0) * x;
    out.hess.noalias() = 2.0 * x * x.transpose();
    out.hess.diagonal().array() += r2 - 1.0;
    out.hess_grad.noalias() = out.hess * out.grad;
    out.vec_lap_grad = (2.0 * static_cast<double>(d_) + 4.0) * x;
  }

  std::optional<Eigen::VectorXd> minimizer_hint() const override {
    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(d_);
    e1(0) = 1.0;  // any point on the unit sphere is a well bottom
    return e1;
  }
  std::optional<PolynomialGrowth> growth() const override {
    return PolynomialGrowth{2.0, 6.0, 6.0, 6.0};
  }

 private:
  std::string name_ = "double_well";
  Eigen::Index d_;
};

// U(x) = x^2/2 + log cosh x: 1-D, strongly convex (m = 1), gradient Lipschitz
// (L1 = 2), with a genuinely non-zero third derivative so the order-1.5
// correction does real work. sup|U'''| = 4/(3 sqrt 3), sup|U''''| = 2.
class LogCoshModel final : public TargetModel {
 public:
  LogCoshModel() = default;

  const std::string& name() const override { return name_; }
  Eigen::Index dim() const override { return 1; }

  void evaluate_into(const Eigen::VectorXd& x, DerivativeStack& out) const override {
    const double t = x(0);
    const double th = std::tanh(t);
    const double sech2 = 1.0 - th * th;
    // log cosh t = |t| + log1p(exp(-2|t|)) - log 2, stable for large |t|
    out.u = 0.5 * t * t + std::abs(t) + std::log1p(std::exp(-2.0 * std::abs(t))) - kLog2;
    out.grad(0) = t + th;
    out.hess(0, 0) = 1.0 + sech2;
    out.hess_grad(0) = out.hess(0, 0) * out.grad(0);
    out.vec_lap_grad(0) = -2.0 * sech2 * th;
  }

  std::optional<Eigen::VectorXd> minimizer_hint() const override {
    return Eigen::VectorXd::Zero(1);
  }
  std::optional<PolynomialGrowth> growth() const override {
    return PolynomialGrowth{2.0, 2.0, 2.0, 2.0};
  }
  std::optional<LipschitzInfo> lipschitz() const override {
    return LipschitzInfo{1.0, 2.0, 4.0 / (3.0 * std::sqrt(3.0)), 2.0};
  }

 private:
  static constexpr double kLog2 = 0.6931471805599453;
  std::string name_ = "logcosh";
};

struct LogisticDataset {
  Eigen::MatrixXd features;  // n x d
  Eigen::VectorXd labels;    // entries exactly 0 or 1
  double prior_scale = 1.0;  // c > 0

  Eigen::Index n() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }

  Eigen::MatrixXd sigma_x() const {
    return features.transpose() * features / static_cast<double>(n());
  }

  void validate() const {
    if (features.rows() == 0 || features.cols() == 0)
      throw ArgumentError("logistic dataset: empty feature matrix");
    if (labels.size() != features.rows())
      throw ArgumentError("logistic dataset: label count does not match row count");
    if (!(prior_scale > 0.0)) throw ArgumentError("logistic dataset: prior scale must be positive");
    if (!features.allFinite()) throw ArgumentError("logistic dataset: non-finite feature");
    for (Eigen::Index i = 0; i < labels.size(); ++i)
      if (labels(i) != 0.0 && labels(i) != 1.0)
        throw ArgumentError("logistic dataset: label at row " + std::to_string(i) +
                            " is not exactly 0 or 1");
  }
};

// Loads `y,x1,...,xd` CSV (header row required, labels strictly 0/1).
inline LogisticDataset load_logistic_csv(const std::string& path, double prior_scale) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("logistic dataset: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ArgumentError("logistic dataset: empty file " + path);
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) header.push_back(tok);
  }
  if (header.empty() || header[0] != "y")
    throw ArgumentError("logistic dataset: header must start with 'y'");
  const Eigen::Index d = static_cast<Eigen::Index>(header.size()) - 1;
  if (d < 1) throw ArgumentError("logistic dataset: no feature columns");
  std::vector<double> ys;
  std::vector<double> xs;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<double> vals;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
    if (vals.size() != header.size())
      throw ArgumentError("logistic dataset: row " + std::to_string(row) + " has " +
                          std::to_string(vals.size()) + " fields, expected " +
                          std::to_string(header.size()));
    if (vals[0] != 0.0 && vals[0] != 1.0)
      throw ArgumentError("logistic dataset: label at row " + std::to_string(row) +
                          " is not exactly 0 or 1");
    ys.push_back(vals[0]);
    xs.insert(xs.end(), vals.begin() + 1, vals.end());
  }
  LogisticDataset data;
  data.prior_scale = prior_scale;
  data.labels = Eigen::Map<Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  data.features = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      xs.data(), static_cast<Eigen::Index>(ys.size()), d);
  data.validate();
  return data;
}

// Numerically stable logistic sigmoid and its first two derivatives.
inline double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}
inline double sigmoid_d1(double t) {
  const double s = sigmoid(t);
  return s * (1.0 - s);
}
inline double sigmoid_d2(double t) {
  const double s = sigmoid(t);
  return s * (1.0 - s) * (1.0 - 2.0 * s);
}

// Base-constant estimates for the logistic posterior. Spectral norms of the
// rank-one x_i x_i^T are |x_i|^2.
struct LipschitzEstimates {
  double m = 0.0;
  double L1 = 0.0;
  double L2 = 0.0;
  double L = 0.0;
  Eigen::Index dim = 0;
  bool strongly_convex = false;
};

inline LipschitzEstimates lipschitz_estimates(const LogisticDataset& data) {
  data.validate();
  const double c = data.prior_scale;
  const double n = static_cast<double>(data.n());
  double max_xx = 0.0;     // max_i |x_i x_i^T| = max_i |x_i|^2
  double max_x_xx = 0.0;   // max_i |x_i| |x_i x_i^T|
  double max_k_x_xx = 0.0; // max_{i,k} |x_i^(k)| |x_i| |x_i x_i^T|
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double r = data.features.row(i).norm();
    max_xx = std::max(max_xx, r * r);
    max_x_xx = std::max(max_x_xx, r * r * r);
    max_k_x_xx = std::max(max_k_x_xx, data.features.row(i).cwiseAbs().maxCoeff() * r * r * r);
  }
  LipschitzEstimates est;
  est.dim = data.dim();
  est.L1 = (c + n) * max_xx;
  est.L2 = 3.0 * n * max_x_xx;
  est.L = 13.0 * n * max_k_x_xx;
  const double lmin = min_eigenvalue_sym(data.sigma_x());
  if (lmin > 0.0) {
    est.m = c * lmin;
    est.strongly_convex = true;
  } else {
    est.m = 0.0;
    est.strongly_convex = false;
  }
  return est;
}

// Bayesian logistic regression with the Gaussian prior N(0, (c Sigma_X)^{-1}).
class LogisticModel final : public TargetModel {
 public:
  explicit LogisticModel(LogisticDataset data) : data_(std::move(data)) {
    data_.validate();
    sigma_x_ = data_.sigma_x();
    estimates_ = lipschitz_estimates(data_);
    const double k = estimates_.L;  // third-derivative Lipschitz modulus; sigmoid'' vanishes at 0
    Eigen::MatrixXd h0 = hessian_at_zero();
    double row_max = 0.0;
    for (Eigen::Index i = 0; i < h0.rows(); ++i) row_max = std::max(row_max, h0.row(i).norm());
    const double k1 = std::max(k, row_max);
    Eigen::VectorXd g0 = grad_at_zero();
    const double k2 = std::max(k1, g0.cwiseAbs().maxCoeff());
    growth_ = PolynomialGrowth{2.0, k, k1, k2};
  }

  const std::string& name() const override { return name_; }
  Eigen::Index dim() const override { return data_.dim(); }

  void evaluate_into(const Eigen::VectorXd& theta, DerivativeStack& out) const override {
    const double c = data_.prior_scale;
    out.grad.noalias() = c * (sigma_x_ * theta);
    out.hess = c * sigma_x_;
    out.vec_lap_grad.setZero();
    double u = 0.5 * c * theta.dot(sigma_x_ * theta);
    for (Eigen::Index i = 0; i < data_.n(); ++i) {
      const auto xi = data_.features.row(i).transpose();
      const double t = xi.dot(theta);
      const double s = sigmoid(t);
      // -log likelihood of row i: log(1 + e^t) - y t, evaluated stably
      u += (t >= 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t))) - data_.labels(i) * t;
      out.grad.noalias() += (s - data_.labels(i)) * xi;
      out.hess.noalias() += sigmoid_d1(t) * (xi * xi.transpose());
      out.vec_lap_grad.noalias() += sigmoid_d2(t) * xi.squaredNorm() * xi;
    }
    out.u = u;
    out.hess_grad.noalias() = out.hess * out.grad;
  }

  std::optional<PolynomialGrowth> growth() const override { return growth_; }
  std::optional<LipschitzInfo> lipschitz() const override {
    if (!estimates_.strongly_convex) return std::nullopt;
    return LipschitzInfo{estimates_.m, estimates_.L1, estimates_.L2, estimates_.L};
  }

  const LogisticDataset& data() const { return data_; }
  const LipschitzEstimates& estimates() const { return estimates_; }

 private:
  Eigen::VectorXd grad_at_zero() const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim());
    for (Eigen::Index i = 0; i < data_.n(); ++i)
      g += (0.5 - data_.labels(i)) * data_.features.row(i).transpose();
    return g;
  }
  Eigen::MatrixXd hessian_at_zero() const {
    Eigen::MatrixXd h = data_.prior_scale * sigma_x_;
    for (Eigen::Index i = 0; i < data_.n(); ++i) {
      const auto xi = data_.features.row(i).transpose();
      h += 0.25 * (xi * xi.transpose());
    }
    return h;
  }

  std::string name_ = "logistic";
  LogisticDataset data_;
  Eigen::MatrixXd sigma_x_;
  LipschitzEstimates estimates_;
  PolynomialGrowth growth_;
};

inline std::unique_ptr<TargetModel> gaussian_model(Eigen::VectorXd mean, Eigen::MatrixXd precision) {
  return std::make_unique<GaussianModel>(std::move(mean), std::move(precision));
}
inline std::unique_ptr<TargetModel> logistic_model(LogisticDataset data) {
  return std::make_unique<LogisticModel>(std::move(data));
}
inline std::unique_ptr<TargetModel> double_well_model(Eigen::Index d) {
  return std::make_unique<DoubleWellModel>(d);
}
inline std::unique_ptr<TargetModel> logcosh_model() { return std::make_unique<LogCoshModel>(); }

// Finite-difference certification of the analytic derivative stack.
//
// The gradient is checked against central differences of U at step h. The
// Hessian is checked against first central differences of the certified
// analytic gradient (a quadratic-exact route that keeps rounding near 1e-11),
// and the vector Laplacian against second central differences of the analytic
// gradient at the wider step 200 h, where truncation and cancellation
// balance for third derivatives.
struct DerivReport {
  double grad_discrepancy = 0.0;
  double hess_discrepancy = 0.0;
  double vec_lap_discrepancy = 0.0;
  double hess_grad_discrepancy = 0.0;  // consistency of the fused product
  double tolerance = 1e-4;
  bool pass = false;

  double max_discrepancy() const {
    return std::max(std::max(grad_discrepancy, hess_discrepancy),
                    std::max(vec_lap_discrepancy, hess_grad_discrepancy));
  }
};

inline DerivReport finite_diff_check(const TargetModel& model, const Eigen::VectorXd& x,
                                     double h = 0.0, double tolerance = 1e-4) {
  model.check_point(x);
  if (h == 0.0) h = 1e-5 * (1.0 + x.norm());
  if (!(h > 0.0) || h > 1e-2) throw ArgumentError("finite_diff_check: h must lie in (0, 1e-2]");
  const Eigen::Index d = model.dim();
  const DerivativeStack at_x = model.evaluate(x);

  // normalized discrepancy |a - b| / (1 + max(|a|, |b|)); non-finite values fail
  auto disc = [](double a, double b) {
    if (!std::isfinite(a) || !std::isfinite(b)) return std::numeric_limits<double>::infinity();
    return std::abs(a - b) / (1.0 + std::max(std::abs(a), std::abs(b)));
  };

  DerivReport report;
  report.tolerance = tolerance;
  Eigen::VectorXd xp = x, xm = x;
  DerivativeStack sp, sm;
  sp.resize(d);
  sm.resize(d);

  for (Eigen::Index i = 0; i < d; ++i) {
    xp(i) = x(i) + h;
    xm(i) = x(i) - h;
    model.evaluate_into(xp, sp);
    model.evaluate_into(xm, sm);
    report.grad_discrepancy =
        std::max(report.grad_discrepancy, disc(at_x.grad(i), (sp.u - sm.u) / (2.0 * h)));
    for (Eigen::Index j = 0; j < d; ++j)
      report.hess_discrepancy = std::max(
          report.hess_discrepancy, disc(at_x.hess(j, i), (sp.grad(j) - sm.grad(j)) / (2.0 * h)));
    xp(i) = x(i);
    xm(i) = x(i);
  }

  const double h3 = 200.0 * h;
  Eigen::VectorXd lap_fd = Eigen::VectorXd::Zero(d);
  for (Eigen::Index u = 0; u < d; ++u) {
    xp(u) = x(u) + h3;
    xm(u) = x(u) - h3;
    model.evaluate_into(xp, sp);
    model.evaluate_into(xm, sm);
    lap_fd += (sp.grad - 2.0 * at_x.grad + sm.grad) / (h3 * h3);
    xp(u) = x(u);
    xm(u) = x(u);
  }
  for (Eigen::Index i = 0; i < d; ++i)
    report.vec_lap_discrepancy =
        std::max(report.vec_lap_discrepancy, disc(at_x.vec_lap_grad(i), lap_fd(i)));

  const Eigen::VectorXd hg = at_x.hess * at_x.grad;
  for (Eigen::Index i = 0; i < d; ++i)
    report.hess_grad_discrepancy =
        std::max(report.hess_grad_discrepancy, disc(at_x.hess_grad(i), hg(i)));

  report.pass = std::isfinite(report.max_discrepancy()) && report.max_discrepancy() <= tolerance;
  return report;
}

}  // namespace hola
