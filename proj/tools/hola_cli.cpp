// Experiment runner: sampling, rate sweeps, constants planning and derivative
// certification, driven by a flat key = value config file.
//
// Exit codes: 0 ok, 1 check failure, 2 config error, 3 divergence,
// 4 violated numerical precondition.

#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "hola/config.hpp"
#include "hola/constants.hpp"
#include "hola/diagnostics.hpp"
#include "hola/experiment.hpp"
#include "hola/io.hpp"
#include "hola/model_factory.hpp"
#include "hola/potentials.hpp"
#include "hola/samplers.hpp"

namespace {

struct GlobalOpts {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::int64_t> seed_override;
  int threads = 0;  // 0: hardware concurrency
};

std::string resolve_out(const GlobalOpts& g, const std::string& file) {
  std::filesystem::path p(file);
  if (!p.is_absolute()) p = std::filesystem::path(g.out_dir) / p;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  return p.string();
}

void fail_on_unknown_keys(const hola::ExperimentConfig& cfg) {
  const auto unknown = cfg.unknown_keys();
  if (!unknown.empty())
    throw hola::ArgumentError("config: unknown key '" + unknown.front() + "'");
}

std::uint64_t read_seed(hola::ExperimentConfig& cfg, const GlobalOpts& g) {
  if (g.seed_override) {
    cfg.override_key("seed", std::to_string(*g.seed_override));
  }
  return static_cast<std::uint64_t>(cfg.get_int("seed"));
}

int cmd_sample(hola::ExperimentConfig& cfg, const GlobalOpts& g) {
  auto model = hola::make_model(cfg);
  hola::SamplerConfig sc;
  sc.scheme = hola::scheme_from_string(cfg.get_string("scheme"));
  sc.gamma = cfg.get_double("gamma");
  sc.n_steps = cfg.get_int("steps");
  sc.burn_in = cfg.get_int("burn_in");
  sc.thin = cfg.get_int("thin", 1);
  sc.seed = read_seed(cfg, g);
  sc.stream_id = static_cast<std::uint64_t>(cfg.get_int("stream_id", 0));
  sc.noise_mode = hola::noise_mode_from_string(cfg.get_string("noise_mode"));
  sc.initial_point = hola::parse_vector(cfg, "x0", model->dim(), /*required=*/true);
  const std::string out_file = resolve_out(g, cfg.get_string("out"));
  fail_on_unknown_keys(cfg);
  sc.validate(*model);  // surface config errors before running

  const hola::ChainOutput out = hola::run_chain(sc, *model);
  std::ofstream os(out_file);
  if (!os) throw hola::ArgumentError("cannot open output file " + out_file);
  hola::write_chain_csv(os, out, cfg.resolved());
  std::cout << "wrote " << out.samples.rows() << " samples to " << out_file << "\n";
  if (out.diverged) {
    std::cerr << "chain diverged at step " << out.divergence_step << "\n";
    return 3;
  }
  return 0;
}

int cmd_rate(hola::ExperimentConfig& cfg, const GlobalOpts& g) {
  auto model = hola::make_model(cfg);
  hola::RateSweepConfig rc;
  rc.scheme = hola::scheme_from_string(cfg.get_string("scheme"));
  rc.gammas = cfg.get_list("gammas");
  const std::string mode = cfg.get_string("mode", "sampling");
  std::string metric_name;
  if (mode == "oracle") {
    rc.mode = hola::RateMode::oracle;
    metric_name = "variance_bias";
    read_seed(cfg, g);  // accepted for interface uniformity; the oracle is exact
    // sampling-mode keys are legal in the file but unused here
    cfg.get_string("metric", "variance_bias");
    cfg.get_int("steps", 0);
    cfg.get_int("replicas", 0);
    cfg.get_int("burn_in", -1);
    cfg.get_int("thin", 1);
  } else if (mode == "sampling") {
    rc.mode = hola::RateMode::sampling;
    rc.metric = hola::rate_metric_from_string(cfg.get_string("metric"));
    metric_name = hola::to_string(rc.metric);
    rc.steps = cfg.get_int("steps");
    rc.replicas = static_cast<int>(cfg.get_int("replicas"));
    rc.burn_in = cfg.get_int("burn_in", -1);
    rc.thin = cfg.get_int("thin", 1);
    rc.seed = read_seed(cfg, g);
    rc.n_bins = static_cast<int>(cfg.get_int("bins", 100));
    rc.range_lo = cfg.get_double("range_lo", 0.0);
    rc.range_hi = cfg.get_double("range_hi", 0.0);
    if (cfg.has("x0")) rc.initial_point = hola::parse_vector(cfg, "x0", model->dim());
  } else {
    throw hola::ArgumentError("config: mode must be 'sampling' or 'oracle', got '" + mode + "'");
  }
  rc.threads = g.threads > 0 ? g.threads : static_cast<int>(std::thread::hardware_concurrency());
  const std::string out_file = resolve_out(g, cfg.get_string("out"));
  fail_on_unknown_keys(cfg);

  const hola::RateReport report = hola::run_rate_sweep(*model, rc);
  std::ofstream os(out_file);
  if (!os) throw hola::ArgumentError("cannot open output file " + out_file);
  hola::write_rate_csv(os, report, metric_name, cfg.resolved());
  std::cout << "slope = " << hola::fmt17(report.fit.slope)
            << "  r2 = " << hola::fmt17(report.fit.r2) << "  (" << out_file << ")\n";
  return 0;
}

int cmd_plan(hola::ExperimentConfig& cfg, const GlobalOpts&) {
  const double m = cfg.get_double("m");
  const double L1 = cfg.get_double("L1");
  const double L2 = cfg.get_double("L2");
  const double L = cfg.get_double("L");
  const double d = cfg.get_double("d");
  const double x0_dist = cfg.get_double("x0_dist", 0.0);
  std::vector<double> epsilons;
  if (cfg.has("epsilons")) epsilons = cfg.get_list("epsilons");
  else cfg.get_string("epsilons", "");
  fail_on_unknown_keys(cfg);

  const hola::LipschitzConstants k = hola::derive_constants(m, L1, L2, L, d);
  auto row = [](const std::string& name, double v) {
    std::cout << "  " << name << " = " << hola::fmt17(v) << "\n";
  };
  std::cout << "inputs:\n";
  row("m", k.m);
  row("L1", k.L1);
  row("L2", k.L2);
  row("L", k.L);
  row("d", k.d);
  row("x0_dist", x0_dist);
  std::cout << "derived:\n";
  row("m_tilde", k.m_tilde);
  row("gamma_max", k.gamma_max);
  row("q1", k.q1);
  row("q2", k.q2);
  for (int i = 0; i < 14; ++i) row("c" + std::to_string(i + 1), k.c[static_cast<std::size_t>(i)]);
  row("Cbar", hola::cbar(k, x0_dist));
  row("Ctilde", hola::ctilde(k, x0_dist));
  if (!epsilons.empty()) {
    std::cout << "mixing plan (n iterations, balancing gamma):\n";
    for (double eps : epsilons) {
      const hola::MixingPlan plan = hola::mixing_time(k, x0_dist, eps);
      std::cout << "  eps = " << hola::fmt17(eps) << "  n = " << plan.n
                << "  gamma = " << hola::fmt17(plan.gamma) << "\n";
    }
  }
  return 0;
}

int cmd_check(hola::ExperimentConfig& cfg, const GlobalOpts& g) {
  auto model = hola::make_model(cfg);
  const std::int64_t points = cfg.get_int("points", 100);
  const double radius = cfg.get_double("radius", 5.0);
  const double h = cfg.get_double("h", 0.0);
  const double tolerance = cfg.get_double("tolerance", 1e-4);
  const std::uint64_t seed = [&] {
    if (g.seed_override) cfg.override_key("seed", std::to_string(*g.seed_override));
    return static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  }();
  fail_on_unknown_keys(cfg);

  hola::RandomStream rng(seed, 0);
  double worst = 0.0;
  bool all_pass = true;
  Eigen::VectorXd x(model->dim());
  for (std::int64_t i = 0; i < points; ++i) {
    for (Eigen::Index k = 0; k < x.size(); ++k) x(k) = radius * (2.0 * rng.next_unit() - 1.0);
    const hola::DerivReport rep = hola::finite_diff_check(*model, x, h, tolerance);
    worst = std::max(worst, rep.max_discrepancy());
    if (!rep.pass) {
      all_pass = false;
      std::cout << "FAIL at x = [";
      for (Eigen::Index k = 0; k < x.size(); ++k)
        std::cout << (k ? "," : "") << hola::fmt17(x(k));
      std::cout << "]  grad = " << hola::fmt17(rep.grad_discrepancy)
                << "  hess = " << hola::fmt17(rep.hess_discrepancy)
                << "  vec_lap = " << hola::fmt17(rep.vec_lap_discrepancy)
                << "  hess_grad = " << hola::fmt17(rep.hess_grad_discrepancy) << "\n";
    }
  }
  std::cout << "model = " << model->name() << "  points = " << points
            << "  radius = " << hola::fmt17(radius)
            << "  max_discrepancy = " << hola::fmt17(worst)
            << "  tolerance = " << hola::fmt17(tolerance) << "\n";
  std::cout << (all_pass ? "result = PASS" : "result = FAIL") << "\n";
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"higher-order Langevin Monte Carlo experiment runner"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOpts g;
  std::int64_t seed_flag = 0;
  app.add_option("--config", g.config_path, "experiment config file (key = value lines)")
      ->required();
  app.add_option("--out", g.out_dir, "directory for output artifacts");
  auto* seed_opt = app.add_option("--seed", seed_flag, "override the config seed");
  app.add_option("--threads", g.threads, "worker threads for sweeps");

  auto* sample = app.add_subcommand("sample", "run one chain, write a sample CSV");
  auto* rate = app.add_subcommand("rate", "step-size sweep with a rate fit");
  auto* plan = app.add_subcommand("plan", "explicit constants and iteration counts");
  auto* check = app.add_subcommand("check", "finite-difference derivative certification");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  if (*seed_opt) g.seed_override = seed_flag;

  try {
    hola::ExperimentConfig cfg = hola::ExperimentConfig::parse_file(g.config_path);
    if (sample->parsed()) return cmd_sample(cfg, g);
    if (rate->parsed()) return cmd_rate(cfg, g);
    if (plan->parsed()) return cmd_plan(cfg, g);
    if (check->parsed()) return cmd_check(cfg, g);
    return 2;
  } catch (const hola::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const hola::PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const hola::StepSizeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const hola::ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
