#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "pamlab/environment.hpp"
#include "pamlab/lattice.hpp"
#include "pamlab/rng.hpp"
#include "pamlab/stats.hpp"

namespace pamlab::walk {

/// Continuous-time simple random walk on Z^d with total jump rate 2 d kappa.
/// sites[0] is the start; sites[i] is occupied on [jump_times[i-1], jump_times[i]).
struct WalkPath {
  int dim = 1;
  double kappa = 0.0;
  double horizon = 0.0;
  std::vector<double> jump_times;
  std::vector<Coord> sites;

  std::size_t jumps() const { return jump_times.size(); }
  const Coord& start() const { return sites.front(); }
  const Coord& end() const { return sites.back(); }
  /// Position at time s in [0, horizon]; right-continuous at jumps.
  const Coord& at(double s) const;
  /// Start of the i-th constant segment (0 for i = 0).
  double segment_begin(std::size_t i) const { return i == 0 ? 0.0 : jump_times[i - 1]; }
  double segment_end(std::size_t i) const {
    return i == jump_times.size() ? horizon : jump_times[i];
  }
};

/// Draws N ~ Poisson(2 d kappa t), then the per-direction step counts, then a
/// uniformly shuffled step order, then the jump times as uniform order
/// statistics. The composite is the law of the rate-2d kappa walk on [0, t].
WalkPath sample_walk(double kappa, int dim, double t, Rng& rng, const Coord& start = {});
WalkPath sample_walk(double kappa, int dim, double t, std::uint64_t seed);

/// Reuses the buffers of `path`. If `want_end` is non-null the endpoint is
/// drawn first and the remaining work is skipped (returning false) unless it
/// equals *want_end. With want_end == nullptr always returns true.
bool sample_walk_into(WalkPath& path, double kappa, int dim, double t, Rng& rng,
                      const Coord& start, const Coord* want_end);

enum class BoundaryMode {
  strict,    // leaving the trajectory's box raises RangeError
  periodic,  // positions are reduced modulo the torus
};

/// Exact integral of xi along the path. With reverse on this is
/// int_0^t xi(X(s), t - s) ds, otherwise int_0^t xi(X(s), s) ds.
double path_integral(const WalkPath& path, const env::EnvTrajectory& traj, bool reverse,
                     BoundaryMode mode = BoundaryMode::strict);

enum class InitialCondition { delta0, ones };
const char* to_string(InitialCondition ic);

struct UEstimate {
  InitialCondition initial;
  double kappa;
  double t;
  std::size_t replicas;
  std::size_t hits;        // replicas with a non-zero weight
  double log_u;            // log of the sample mean of the weights
  double log_stderr;       // delta-method standard error of log_u
  stats::Interval log_ci;  // percentile bootstrap interval for log_u
  bool degenerate;         // every weight was zero
};

struct EstimateOptions {
  InitialCondition initial = InitialCondition::delta0;
  BoundaryMode boundary = BoundaryMode::strict;
  std::size_t bootstrap = 200;
  unsigned threads = 1;
};

/// Monte Carlo estimate of u(0,t) = E_0[exp{int xi(X(s), t-s) ds} u0(X(t))].
/// Replica r uses the stream stream_seed(seed, r); the result does not
/// depend on the thread count.
UEstimate fk_estimate_u(const env::EnvTrajectory& traj, double kappa, double t,
                        std::size_t replicas, std::uint64_t seed,
                        const EstimateOptions& options = {});

struct LyapunovEstimate {
  double kappa;
  double t;
  std::size_t replicas;
  double lambda_hat;  // (1/t) log u_hat(0,t)
  double std_error;   // delta-method standard error of lambda_hat
  std::uint64_t env_seed;
  std::uint64_t walk_seed;
  bool degenerate;
};

/// Quenched sweep: the same trajectory for every kappa. kappa = 0 entries are
/// evaluated exactly without sampling.
std::vector<LyapunovEstimate> lyapunov_sweep(const env::EnvTrajectory& traj,
                                             std::span<const double> kappas, double t,
                                             std::size_t replicas, std::uint64_t walk_seed,
                                             const EstimateOptions& options = {});
/// Samples one environment from `config` (auto-sizing nothing) and sweeps.
std::vector<LyapunovEstimate> lyapunov_sweep(const env::EnvConfig& config,
                                             std::span<const double> kappas, double t,
                                             std::size_t replicas, std::uint64_t walk_seed,
                                             const EstimateOptions& options = {});

void write_sweep_csv(std::ostream& out, std::span<const LyapunovEstimate> rows);

/// Axis-aligned space-time box: [lo_j, hi_j) on each axis times [t0, t1).
struct SpaceTimeBox {
  Coord lo;
  Coord hi;
  double t0 = 0.0;
  double t1 = 0.0;

  bool contains_site(const Coord& x, int dim) const;
};

/// Lebesgue measure of {s in [0, horizon] : (X(s), s) in union of boxes}.
/// With reverse on the time coordinate is horizon - s instead of s.
double local_time(const WalkPath& path, std::span<const SpaceTimeBox> region,
                  bool reverse = false);
/// Time spent at site x up to the horizon.
double local_time_at(const WalkPath& path, const Coord& x);

/// A regular space-time grid of cells: spatial cell index on axis j is
/// floor((x_j - origin_j) / width) and slab i covers [(i-1) A, i A).
struct CrossingGrid {
  double width = 1.0;
  double slab = 1.0;
  Coord origin;
};

enum class CrossingMode {
  entries,   // 1 + number of cell changes inside the slab
  distinct,  // number of distinct cells visited inside the slab
};

struct CrossingCount {
  std::size_t total;                 // k_*
  std::vector<std::size_t> per_slab;  // l_i, one entry per slab, ceil(t/A) slabs
};

CrossingCount count_block_crossings(const WalkPath& path, const CrossingGrid& grid,
                                    CrossingMode mode = CrossingMode::entries);

/// sup over s in [0,t] of the sup-norm of X(s).
std::int64_t max_excursion(const WalkPath& path);

/// 2 exp{-C^2 sqrt(kappa t) / (2 (C + 3 sqrt(kappa t)))}
double max_excursion_bound(double kappa, double t, double c);

struct ExcursionRow {
  double kappa;
  double t;
  double c;
  std::size_t paths;
  std::size_t hits;
  double frequency;
  double std_error;
  double bound;
  bool passes;  // frequency <= bound + 3 stderr
};
/// Monte Carlo frequency of sup_{s<=t} |X(s)| >= C sqrt(kappa t) for the
/// one-dimensional walk with rate 2 kappa.
ExcursionRow max_excursion_check(double kappa, double t, double c, std::size_t paths,
                                 std::uint64_t seed);

/// Smallest torus half-width L such that, by the excursion bound and a union
/// bound over coordinates, P(walk leaves [-L, L]^d before t) <= budget.
std::int64_t auto_box_radius(double kappa, double t, int dim, double budget = 1e-6);

}  // namespace pamlab::walk
