// CSV writers for chain and rate-sweep artifacts. Every float is printed with
// 17 significant digits so files round-trip exactly and reruns with the same
// config and seed are byte-identical.
#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "hola/experiment.hpp"
#include "hola/samplers.hpp"

namespace hola {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

using ConfigEcho = std::vector<std::pair<std::string, std::string>>;

// Header `step,x1,...,xd`, one retained iterate per row, then the config echo
// and the divergence flag as trailing comment lines.
inline void write_chain_csv(std::ostream& os, const ChainOutput& out, const ConfigEcho& echo) {
  os << "step";
  for (Eigen::Index k = 0; k < out.samples.cols(); ++k) os << ",x" << (k + 1);
  os << "\n";
  for (Eigen::Index i = 0; i < out.samples.rows(); ++i) {
    os << out.steps[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < out.samples.cols(); ++k) os << ',' << fmt17(out.samples(i, k));
    os << "\n";
  }
  for (const auto& [k, v] : echo) os << "# " << k << " = " << v << "\n";
  os << "# diverged = " << (out.diverged ? 1 : 0);
  if (out.diverged) os << " at_step = " << out.divergence_step;
  os << "\n";
}

// Header `gamma,metric,error,stderr`, then the fit summary and config echo as
// comment lines.
inline void write_rate_csv(std::ostream& os, const RateReport& report,
                           const std::string& metric_name, const ConfigEcho& echo) {
  os << "gamma,metric,error,stderr\n";
  for (const auto& p : report.points)
    os << fmt17(p.gamma) << ',' << metric_name << ',' << fmt17(p.error) << ','
       << fmt17(p.std_error) << "\n";
  os << "# fit: slope = " << fmt17(report.fit.slope)
     << ", intercept = " << fmt17(report.fit.intercept) << ", r2 = " << fmt17(report.fit.r2)
     << "\n";
  for (const auto& [k, v] : echo) os << "# " << k << " = " << v << "\n";
}

}  // namespace hola
