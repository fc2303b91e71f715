#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pamlab/environment.hpp"
#include "pamlab/lattice_operator.hpp"

namespace pamlab::oracle {

/// Piecewise-constant potential: values[k] holds V on [breaks[k], breaks[k+1])
/// as a dense vector over the box sites (BoxDomain indexing).
struct PotentialSchedule {
  std::vector<double> breaks;
  std::vector<std::vector<double>> values;

  std::size_t intervals() const { return values.size(); }
  double horizon() const { return breaks.back(); }
  void validate(std::size_t sites) const;
  /// Same potential with time running backwards: V'(s) = V(T - s).
  PotentialSchedule reversed() const;
  /// Restriction to [0, t], t <= horizon.
  PotentialSchedule truncated(double t) const;

  static PotentialSchedule constant(double t, std::vector<double> v);
};

/// Schedule on `box` over [t0, t1] read from a trajectory, with every event
/// time of a box site as a breakpoint (shifted so the schedule starts at 0).
/// Box sites are looked up on the trajectory's torus.
PotentialSchedule schedule_from_trajectory(const env::EnvTrajectory& traj, const BoxDomain& box,
                                           double t0, double t1);

enum class Method {
  automatic,  // dense when the box has at most dense_limit sites
  dense,      // Pade scaling-and-squaring on the explicit matrix
  action,     // Taylor series of the shifted non-negative operator, substepped
};

struct PropagatorOptions {
  Method method = Method::automatic;
  std::size_t dense_limit = 128;
  std::size_t max_sites = 4'000'000;
  double tolerance = 1e-10;
};

/// v <- exp(tau * H) v for the operator H. Large values are renormalised
/// into log_scale so that the true result is exp(log_scale) * v.
void apply_exponential(const LatticeOperator& h, double tau, Eigen::VectorXd& v,
                       double& log_scale, const PropagatorOptions& options = {});

/// Solution u(., t) of du/dt = kappa Lap u + V u, u(., 0) = u0, V from the
/// schedule applied in forward order. The box boundary is dirichlet or torus.
std::vector<double> solve_pam(const PotentialSchedule& schedule, double kappa,
                              const BoxDomain& box, const std::vector<double>& u0, double t,
                              const PropagatorOptions& options = {});

/// log E_start[exp{int_0^t V(X(s), s) ds} f(X(t))] for the walk with rate 2 d
/// kappa killed on leaving a dirichlet box. f empty means f = 1.
double fk_log_expectation(const PotentialSchedule& schedule, double kappa, const BoxDomain& box,
                          const Coord& start, double t, const std::vector<double>& f = {},
                          const PropagatorOptions& options = {});
double fk_expectation(const PotentialSchedule& schedule, double kappa, const BoxDomain& box,
                      const Coord& start, double t, const std::vector<double>& f = {},
                      const PropagatorOptions& options = {});

/// Smallest L with dim * P(Poisson(2 kappa t) > L) * exp(log_weight) <= budget:
/// a dirichlet box [-L, L]^d then loses at most `budget` of an expectation
/// whose integrand is bounded by exp(log_weight).
std::int64_t escape_half_width(double kappa, double t, int dim, double log_weight,
                               double budget = 1e-13);

/// One-line site dump: `x_1 ... x_d value` per site, in index order.
void write_field_csv(std::ostream& out, const BoxDomain& box, const std::vector<double>& u);

struct Comparison {
  double kappa;
  double t;
  std::size_t replicas;
  std::uint64_t seed;
  std::size_t hits;
  double mc_u;
  double mc_stderr;
  double oracle_u;
  double z;
};

/// Monte Carlo u(0,t) with u0 = delta_0 against the oracle on the
/// trajectory's torus. Walk positions are reduced modulo the torus.
Comparison mc_vs_oracle_report(const env::EnvTrajectory& traj, double kappa, double t,
                               std::size_t replicas, std::uint64_t seed, unsigned threads = 1,
                               const PropagatorOptions& options = {});

std::string to_json(const Comparison& c);

}  // namespace pamlab::oracle
