#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace pamlab::report {

struct SweepRow {
  double kappa;
  double t;
  std::size_t replicas;
  double lambda_hat;
  double stderr_;
};

/// Reads `kappa,t,replicas,lambda_hat,stderr,...` rows; # lines are skipped.
std::vector<SweepRow> read_sweep_csv(std::istream& in);

struct SweepPlot {
  std::vector<SweepRow> rows;
  double env_mean = 0.0;
  int width = 720;
  int height = 480;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string source;  // config hash of the sweep that produced the rows
};

/// Self-contained SVG of lambda_hat against kappa (axis log10(1 + kappa))
/// with 95% error bars and a dashed line at E xi.
std::string sweep_svg(const SweepPlot& plot);

}  // namespace pamlab::report
