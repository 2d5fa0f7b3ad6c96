#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "hola/potentials.hpp"
#include "hola/rng.hpp"

using namespace hola;
using Catch::Approx;

namespace {

Eigen::VectorXd vec1(double a) { return Eigen::VectorXd::Constant(1, a); }
Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

LogisticDataset tiny_dataset() {
  LogisticDataset data;
  data.features = Eigen::MatrixXd(1, 2);
  data.features << 1.0, 0.0;
  data.labels = Eigen::VectorXd::Ones(1);
  data.prior_scale = 1.0;
  return data;
}

LogisticDataset random_dataset(int n, int d, std::uint64_t seed) {
  RandomStream rng(seed, 0);
  LogisticDataset data;
  data.features.resize(n, d);
  data.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) data.features(i, j) = 2.0 * rng.next_unit() - 1.0;
    data.labels(i) = rng.next_unit() < 0.5 ? 0.0 : 1.0;
  }
  data.prior_scale = 1.0;
  return data;
}

}  // namespace

TEST_CASE("gaussian stack: identity precision in 2-D") {
  GaussianModel model(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2));
  const DerivativeStack s = model.evaluate(vec2(1.0, 2.0));
  REQUIRE(s.grad == vec2(1.0, 2.0));
  REQUIRE(s.hess == Eigen::MatrixXd::Identity(2, 2));
  REQUIRE(s.hess_grad == vec2(1.0, 2.0));
  REQUIRE(s.vec_lap_grad == vec2(0.0, 0.0));  // identically zero for quadratics
  REQUIRE(s.u == Approx(2.5));
}

TEST_CASE("gaussian stack: scaled 1-D precision") {
  GaussianModel model(Eigen::VectorXd::Zero(1), 2.0 * Eigen::MatrixXd::Identity(1, 1));
  const DerivativeStack s = model.evaluate(vec1(3.0));
  REQUIRE(s.grad(0) == 6.0);
  REQUIRE(s.hess_grad(0) == 12.0);
}

TEST_CASE("gaussian gradient vanishes at the minimizer hint") {
  Eigen::MatrixXd prec(2, 2);
  prec << 2.0, 0.3, 0.3, 1.0;
  GaussianModel model(vec2(0.5, -1.0), prec);
  const auto hint = model.minimizer_hint();
  REQUIRE(hint.has_value());
  const DerivativeStack s = model.evaluate(*hint);
  REQUIRE(s.grad.norm() <= 1e-8 * (1.0 + hint->norm()));
}

TEST_CASE("gaussian rejects bad precision") {
  REQUIRE_THROWS_AS(GaussianModel(vec2(0, 0), -Eigen::MatrixXd::Identity(2, 2)), ArgumentError);
  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 0.5, -0.5, 1.0;
  REQUIRE_THROWS_AS(GaussianModel(vec2(0, 0), asym), ArgumentError);
}

TEST_CASE("evaluate rejects bad points") {
  DoubleWellModel model(2);
  REQUIRE_THROWS_AS(model.evaluate(vec1(1.0)), ArgumentError);
  Eigen::VectorXd nan = vec2(1.0, std::nan(""));
  REQUIRE_THROWS_AS(model.evaluate(nan), ArgumentError);
}

TEST_CASE("double-well stack in 1-D and 3-D") {
  DoubleWellModel model(1);
  DerivativeStack s = model.evaluate(vec1(2.0));
  REQUIRE(s.grad(0) == Approx(6.0));
  REQUIRE(s.hess(0, 0) == Approx(11.0));
  REQUIRE(s.vec_lap_grad(0) == Approx(12.0));

  REQUIRE(model.evaluate(vec1(1.0)).grad(0) == 0.0);  // well bottom
  REQUIRE(model.evaluate(vec1(0.0)).hess(0, 0) == -1.0);
  REQUIRE(model.evaluate(vec1(0.0)).vec_lap_grad(0) == 0.0);

  DoubleWellModel model3(3);
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(3);
  e1(0) = 1.0;
  const DerivativeStack s3 = model3.evaluate(e1);
  REQUIRE(s3.vec_lap_grad(0) == Approx(10.0));
  REQUIRE(s3.vec_lap_grad(1) == 0.0);
  REQUIRE(s3.grad.norm() == 0.0);
}

TEST_CASE("double-well gradient growth matches the cubic envelope") {
  // |grad U(x)| <= 2 (1 + |x|)^3 over |x| <= 100 (rho = 2, beta = 1 shape)
  DoubleWellModel model(3);
  RandomStream rng(5, 0);
  for (int i = 0; i < 500; ++i) {
    Eigen::VectorXd x(3);
    for (int k = 0; k < 3; ++k) x(k) = 100.0 * (2.0 * rng.next_unit() - 1.0);
    const double g = model.evaluate(x).grad.norm();
    const double r = x.norm();
    REQUIRE(g <= 2.0 * std::pow(1.0 + r, 3.0));
  }
}

TEST_CASE("log-cosh stack values") {
  LogCoshModel model;
  DerivativeStack s = model.evaluate(vec1(0.0));
  REQUIRE(s.grad(0) == 0.0);
  REQUIRE(s.hess(0, 0) == 2.0);

  s = model.evaluate(vec1(1.0));
  REQUIRE(s.grad(0) == Approx(1.0 + std::tanh(1.0)).epsilon(1e-15));
  const double sech2 = 1.0 / (std::cosh(1.0) * std::cosh(1.0));
  REQUIRE(s.hess(0, 0) == Approx(1.0 + sech2).epsilon(1e-15));
  REQUIRE(s.vec_lap_grad(0) == Approx(-2.0 * sech2 * std::tanh(1.0)).epsilon(1e-15));

  // curvature flattens to 1 in the tails
  REQUIRE(model.evaluate(vec1(20.0)).hess(0, 0) == Approx(1.0).margin(1e-8));

  // stable energy far out: u ~ x^2/2 + |x| - log 2
  const double u = model.evaluate(vec1(500.0)).u;
  REQUIRE(u == Approx(0.5 * 500.0 * 500.0 + 500.0 - std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("logistic stack at theta = 0") {
  LogisticModel model(tiny_dataset());
  const DerivativeStack s = model.evaluate(vec2(0.0, 0.0));
  REQUIRE(s.grad(0) == Approx(-0.5));  // x1 (sigmoid(0) - 1)
  REQUIRE(s.grad(1) == 0.0);
  // hessian = Sigma_X + x1 x1^T / 4 with Sigma_X = diag(1, 0)
  REQUIRE(s.hess(0, 0) == Approx(1.25));
  REQUIRE(s.hess(1, 1) == 0.0);
  // sigmoid'' vanishes at 0
  REQUIRE(s.vec_lap_grad.norm() == 0.0);
}

TEST_CASE("logistic lipschitz estimates on the single-datum set") {
  const LipschitzEstimates est = lipschitz_estimates(tiny_dataset());
  REQUIRE(est.L1 == Approx(2.0));
  REQUIRE(est.L2 == Approx(3.0));
  REQUIRE(est.L == Approx(13.0));
  REQUIRE(est.m == 0.0);  // Sigma_X = diag(1, 0) is singular
  REQUIRE_FALSE(est.strongly_convex);
}

TEST_CASE("logistic hessian obeys its Lipschitz modulus") {
  const LogisticDataset data = random_dataset(12, 3, 99);
  LogisticModel model(data);
  const double l2 = model.estimates().L2;
  RandomStream rng(7, 0);
  for (int i = 0; i < 50; ++i) {
    Eigen::VectorXd a(3), b(3);
    for (int k = 0; k < 3; ++k) {
      a(k) = 4.0 * (2.0 * rng.next_unit() - 1.0);
      b(k) = 4.0 * (2.0 * rng.next_unit() - 1.0);
    }
    const double gap = spectral_norm_sym(model.evaluate(a).hess - model.evaluate(b).hess);
    REQUIRE(gap <= l2 * (a - b).norm() + 1e-12);
  }
}

TEST_CASE("logistic dataset validation") {
  LogisticDataset bad = tiny_dataset();
  bad.labels(0) = 0.5;
  REQUIRE_THROWS_AS(bad.validate(), ArgumentError);
  bad = tiny_dataset();
  bad.prior_scale = 0.0;
  REQUIRE_THROWS_AS(bad.validate(), ArgumentError);
}

TEST_CASE("hessian symmetry across models and points") {
  const LogisticDataset data = random_dataset(10, 3, 3);
  LogisticModel logistic(data);
  DoubleWellModel dw(3);
  RandomStream rng(11, 0);
  for (int i = 0; i < 100; ++i) {
    Eigen::VectorXd x(3);
    for (int k = 0; k < 3; ++k) x(k) = 5.0 * (2.0 * rng.next_unit() - 1.0);
    for (const TargetModel* m : {static_cast<const TargetModel*>(&logistic),
                                 static_cast<const TargetModel*>(&dw)}) {
      const Eigen::MatrixXd h = m->evaluate(x).hess;
      const double scale = std::max(1e-300, spectral_norm_sym(h));
      REQUIRE(spectral_norm_sym(h - h.transpose()) <= 1e-12 * scale);
    }
  }
}

TEST_CASE("finite differences certify every shipped model") {
  const LogisticDataset data = random_dataset(10, 3, 21);
  GaussianModel gauss(vec2(0.3, -0.2), (Eigen::MatrixXd(2, 2) << 2.0, 0.4, 0.4, 1.0).finished());
  DoubleWellModel dw(3);
  LogCoshModel lc;
  LogisticModel logistic(data);
  const std::vector<const TargetModel*> models{&gauss, &dw, &lc, &logistic};

  RandomStream rng(17, 0);
  for (const TargetModel* m : models) {
    for (int i = 0; i < 100; ++i) {
      Eigen::VectorXd x(m->dim());
      for (Eigen::Index k = 0; k < m->dim(); ++k) x(k) = 5.0 * (2.0 * rng.next_unit() - 1.0);
      const DerivReport rep = finite_diff_check(*m, x);
      INFO(m->name() << " at |x| = " << x.norm() << ": max discrepancy "
                     << rep.max_discrepancy());
      REQUIRE(rep.pass);
    }
  }
}

TEST_CASE("finite differences on quadratics are exact to rounding") {
  GaussianModel gauss(vec2(0.0, 0.0), Eigen::MatrixXd::Identity(2, 2));
  const DerivReport rep = finite_diff_check(gauss, vec2(1.3, -0.4));
  REQUIRE(rep.max_discrepancy() <= 1e-10);
}

TEST_CASE("double-well certification at a reference point") {
  DoubleWellModel dw(2);
  REQUIRE(finite_diff_check(dw, vec2(1.3, -0.7)).pass);
}

TEST_CASE("log-cosh certification at h = 1e-5") {
  LogCoshModel lc;
  REQUIRE(finite_diff_check(lc, vec1(1.0), 1e-5).pass);
  REQUIRE(finite_diff_check(lc, vec1(0.5), 1e-5).pass);
}

TEST_CASE("finite_diff_check validates its step") {
  LogCoshModel lc;
  REQUIRE_THROWS_AS(finite_diff_check(lc, vec1(0.5), 0.1), ArgumentError);
  REQUIRE_THROWS_AS(finite_diff_check(lc, vec1(0.5), -1e-5), ArgumentError);
}

TEST_CASE("csv loader round trip and validation") {
  const std::string path = "logistic_test.csv";
  {
    std::ofstream os(path);
    os << "y,x1,x2\n1,0.5,-0.25\n0,1.0,2.0\n";
  }
  const LogisticDataset data = load_logistic_csv(path, 2.0);
  REQUIRE(data.n() == 2);
  REQUIRE(data.dim() == 2);
  REQUIRE(data.features(0, 1) == -0.25);
  REQUIRE(data.labels(1) == 0.0);
  REQUIRE(data.prior_scale == 2.0);

  {
    std::ofstream os(path);
    os << "y,x1\n0.5,1.0\n";
  }
  REQUIRE_THROWS_AS(load_logistic_csv(path, 1.0), ArgumentError);
  {
    std::ofstream os(path);
    os << "x1,y\n1,1\n";
  }
  REQUIRE_THROWS_AS(load_logistic_csv(path, 1.0), ArgumentError);
  std::remove(path.c_str());
}
