// Builds a target model from experiment-config keys. Also registers one
// deliberately broken fixture used as a negative control for the derivative
// certifier.
#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>

#include "hola/config.hpp"
#include "hola/errors.hpp"
#include "hola/potentials.hpp"

namespace hola {

// Gaussian with a corrupted analytic gradient; finite_diff_check must flag it.
class BadGradientFixture final : public TargetModel {
 public:
  const std::string& name() const override { return name_; }
  Eigen::Index dim() const override { return 1; }
  void evaluate_into(const Eigen::VectorXd& x, DerivativeStack& out) const override {
    const double t = x(0);
    out.u = 0.5 * t * t;
    out.grad(0) = t + 0.01 * (1.0 + t * t);  // wrong on purpose
    out.hess(0, 0) = 1.0;
    out.hess_grad(0) = out.grad(0);
    out.vec_lap_grad(0) = 0.0;
  }

 private:
  std::string name_ = "fixture_bad_gradient";
};

inline Eigen::VectorXd parse_vector(ExperimentConfig& cfg, const std::string& key,
                                    Eigen::Index dim, bool required = false) {
  if (!cfg.has(key)) {
    if (required) throw ArgumentError("config: missing required key '" + key + "'");
    cfg.get_string(key, "0");  // mark the defaulted key for the resolved echo
    return Eigen::VectorXd::Zero(dim);
  }
  const std::vector<double> vals = cfg.get_list(key);
  if (vals.size() == 1) return Eigen::VectorXd::Constant(dim, vals[0]);
  if (static_cast<Eigen::Index>(vals.size()) != dim)
    throw ArgumentError("config: key '" + key + "' has " + std::to_string(vals.size()) +
                        " entries, expected " + std::to_string(dim));
  return Eigen::Map<const Eigen::VectorXd>(vals.data(), dim);
}

inline std::unique_ptr<TargetModel> make_model(ExperimentConfig& cfg) {
  const std::string target = cfg.get_string("target");
  if (target == "gaussian") {
    const auto dim = static_cast<Eigen::Index>(cfg.get_int("dim", 1));
    Eigen::VectorXd mean = parse_vector(cfg, "mean", dim);
    Eigen::VectorXd prec_diag;
    if (cfg.has("precision_diag")) {
      prec_diag = parse_vector(cfg, "precision_diag", dim);
    } else {
      cfg.get_string("precision_diag", "1");
      prec_diag = Eigen::VectorXd::Ones(dim);
    }
    return gaussian_model(std::move(mean), prec_diag.asDiagonal());
  }
  if (target == "double_well") {
    return double_well_model(static_cast<Eigen::Index>(cfg.get_int("dim", 1)));
  }
  if (target == "logcosh") {
    return logcosh_model();
  }
  if (target == "logistic") {
    const std::string path = cfg.get_string("data");
    const double c = cfg.get_double("prior_scale", 1.0);
    return logistic_model(load_logistic_csv(path, c));
  }
  if (target == "fixture_bad_gradient") {
    return std::make_unique<BadGradientFixture>();
  }
  throw ArgumentError("config: unknown target '" + target +
                      "' (expected gaussian|double_well|logcosh|logistic)");
}

}  // namespace hola
