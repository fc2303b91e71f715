#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pamlab/lattice.hpp"
#include "pamlab/stats.hpp"

namespace pamlab::env {

enum class Kind {
  spin_markov,
  zero_range,
  random_walks,
  frozen,
  derived,  // produced by transformations (e.g. truncation); never sampled
};

std::string to_string(Kind kind);
Kind kind_from_string(const std::string& name);

/// Finite-state Markov chain Y run independently at every site.
/// rates[i][j] is the jump rate from state i to state j (diagonal ignored).
struct SpinMarkovParams {
  std::vector<double> values{-1.0, 1.0};
  std::vector<std::vector<double>> rates{{0.0, 1.0}, {1.0, 0.0}};
};

/// Zero-range process with g(k) = k^beta started from the product law whose
/// marginal is proportional to rho^k / prod_{l<=k} g(l).
struct ZeroRangeParams {
  double rho = 1.0;
  double beta = 1.0;
};

/// xi = gamma * (number of independent rate-2d walkers) - shift, with a
/// Poisson(rho) initial occupation per site.
struct RandomWalksParams {
  double rho = 1.0;
  double gamma = 1.0;
  double shift = 0.0;
};

struct EnvConfig {
  Kind kind = Kind::spin_markov;
  int dim = 1;
  std::int64_t box_radius = 8;  // torus side is 2L+1
  double horizon = 10.0;
  SpinMarkovParams spin;
  ZeroRangeParams zero_range;
  RandomWalksParams walks;
  std::map<Coord, double> frozen;  // unlisted sites are 0
  std::uint64_t seed = 0;

  void validate() const;

  static EnvConfig two_state_spin(int dim, std::int64_t box_radius, double horizon,
                                  double flip_rate, std::uint64_t seed);
  static EnvConfig frozen_field(int dim, std::int64_t box_radius, double horizon,
                                std::map<Coord, double> values);
};

/// Caps on simulation size; exceeding one raises ResourceError.
struct ResourceBudget {
  std::size_t max_events = 40'000'000;
  std::size_t max_sites = 20'000'000;

  /// Defaults overridden by PAMLAB_MAX_EVENTS / PAMLAB_MAX_SITES when set.
  static ResourceBudget from_environment();
};

struct Event {
  double time;
  double value;
  friend bool operator==(const Event&, const Event&) = default;
};

/// A realised piecewise-constant field on torus x [0, T]. Every site carries
/// a time-sorted event list starting at t = 0; the value is right-continuous.
/// Immutable after construction, so concurrent read-only queries are safe.
class EnvTrajectory {
 public:
  EnvTrajectory(EnvConfig config, std::vector<std::vector<Event>> events);

  /// Build from explicit per-site lists; unlisted sites are constant 0.
  static EnvTrajectory from_events(EnvConfig config,
                                   const std::map<Coord, std::vector<Event>>& events);

  const EnvConfig& config() const { return config_; }
  const BoxDomain& torus() const { return torus_; }
  int dim() const { return torus_.dim(); }
  double horizon() const { return config_.horizon; }
  std::size_t site_count() const { return events_.size(); }
  std::size_t event_count() const;

  std::size_t site_index(const Coord& x) const { return torus_.index(torus_.wrap(x)); }
  std::span<const Event> events(std::size_t site) const { return events_[site]; }
  std::span<const Event> events(const Coord& x) const { return events_[site_index(x)]; }

  double value(std::size_t site, double s) const;
  double value(const Coord& x, double s) const { return value(site_index(x), s); }

  /// sup of the field over [s, s+w); w == 0 returns the value at s.
  double sup_window(std::size_t site, double s, double w) const;

  /// Exact integral of the field at `site` over [a, b], summed piece by piece
  /// from left to right.
  double integrate(std::size_t site, double a, double b) const;

  /// Space-time average over torus x [0, T].
  double empirical_mean() const { return empirical_mean_; }
  /// Space-time average over torus x [a, b].
  double window_mean(double a, double b) const;

 private:
  EnvConfig config_;
  BoxDomain torus_;
  std::vector<std::vector<Event>> events_;
  double empirical_mean_ = 0.0;
};

EnvTrajectory sample_env(const EnvConfig& config,
                         const ResourceBudget& budget = ResourceBudget{});

double env_value(const EnvTrajectory& traj, const Coord& x, double s);
double sup_window(const EnvTrajectory& traj, const Coord& x, double s, double w);

/// Analytic E xi(0,0) where a closed form or convergent series exists; the
/// spatial average over the torus for frozen fields.
double env_mean(const EnvConfig& config);

/// Stationary law of the spin chain from the balance equations.
std::vector<double> spin_stationary_law(const SpinMarkovParams& params);

/// Truncated marginal pmf of the zero-range product measure, normalised.
/// The series is cut once the geometric tail bound is below 1e-12 of the
/// partial sum.
std::vector<double> zero_range_marginal(const ZeroRangeParams& params);

/// Means of the field over torus x [0,T] and torus x [T/2,T] with standard
/// errors from per-site time averages.
struct StationarityDiagnostic {
  double mean_full;
  double mean_late;
  double stderr_full;
  double stderr_late;
  bool consistent;  // |difference| < 3 combined standard errors
};
StationarityDiagnostic stationarity_diagnostic(const EnvTrajectory& traj);

/// Empirical check of the growth condition
///   P(sup_{s in [0,1]} |B_R|^-1 sum_{y in B_R} xi(y,s) >= C) <= |B_R|^-alpha
/// with alpha the threshold [2d(2d+1)+1](d+2)/d.
struct GrowthRow {
  std::int64_t radius;
  double level;
  std::size_t reps;
  std::size_t hits;
  double probability;
  stats::Interval ci;
  double alpha;
  double bound;
  bool passes;  // ci.upper <= bound; otherwise flagged
};
double growth_alpha_threshold(int dim);
std::vector<GrowthRow> verify_growth_condition(const EnvConfig& config,
                                               std::span<const std::int64_t> radii,
                                               std::span<const double> levels,
                                               std::size_t reps,
                                               const ResourceBudget& budget = ResourceBudget{});

// Line-delimited record format:
//   # pamlab-trajectory 1
//   # config <json>
//   # seed <n>
//   <x_1> ... <x_d> <time> <value>      one line per event, sites in index order
// Later lines starting with # are ignored.
void write_trajectory(std::ostream& out, const EnvTrajectory& traj);
EnvTrajectory read_trajectory(std::istream& in);

std::string config_to_json(const EnvConfig& config);
EnvConfig config_from_json(const std::string& json);

}  // namespace pamlab::env
