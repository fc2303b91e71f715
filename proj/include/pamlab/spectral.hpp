#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pamlab/environment.hpp"
#include "pamlab/lattice_operator.hpp"
#include "pamlab/oracle.hpp"
#include "pamlab/rng.hpp"

namespace pamlab::spectral {

using Sparse = LatticeOperator::Sparse;

struct EigenOptions {
  std::size_t dense_limit = 512;
  std::size_t krylov = 120;
  std::size_t max_restarts = 400;
  double tolerance = 1e-10;  // relative, on the eigenvalue
};

struct EigenPair {
  double value;
  Eigen::VectorXd vector;  // unit norm
  double residual;         // ||(op - value) v||_2
  std::string method;      // dense, tridiagonal or lanczos
};

/// Largest eigenvalue of a symmetric matrix. Tridiagonal matrices use Sturm
/// bisection with inverse iteration, small ones a dense solver, the rest
/// restarted Lanczos with full reorthogonalisation.
EigenPair top_eigenpair(const Sparse& m, const EigenOptions& options = {});
EigenPair top_eigenpair(const LatticeOperator& op, const EigenOptions& options = {});

/// Every eigenvalue, descending (dense solver).
Eigen::VectorXd eigenvalues(const Sparse& m);

/// -2 (1 - cos(pi / (2n + 2))): top of the 1-d dirichlet Laplacian on [-n, n].
double dirichlet_top_1d(std::int64_t n);

/// Half-open integer rectangle prod [lo_j, hi_j).
struct IntBox {
  Coord lo;
  Coord hi;

  std::size_t size(int dim) const;
  bool contains(const Coord& x, int dim) const;
  std::vector<Coord> sites(int dim) const;
};

struct PartitionSpec {
  int dim = 1;
  IntBox parent;
  std::vector<IntBox> parts;

  /// Exact disjoint cover of the parent; raises ContractError otherwise.
  void validate() const;
  /// Tiling by rectangles of the given side lengths (the last ones clipped).
  static PartitionSpec regular(int dim, const IntBox& parent, const Coord& sides);
  /// Tiling by random cuts along every axis.
  static PartitionSpec random(int dim, const IntBox& parent, Rng& rng);
};

/// Number of connected components of the nearest-neighbour graph on sites.
std::size_t components(const std::vector<Coord>& sites, int dim);

/// <Delta f, f> on Z^d for f supported on `sites` (zero elsewhere).
double free_form(const std::vector<Coord>& sites, const std::vector<double>& f, int dim);
/// Sum over parts of the Neumann form of the restriction of f.
double partition_form(const PartitionSpec& p, const std::vector<Coord>& sites,
                      const std::vector<double>& f);

struct NeumannReport {
  int dim;
  IntBox box;
  std::size_t sites;
  bool symmetric;            // (b)
  double top_eigenvalue;     // (a): <= 1e-10
  bool negative_semidefinite;
  std::size_t kernel_dim;    // eigenvalues above -1e-10
  std::size_t components;
  double second_eigenvalue;
  bool constants_in_kernel;  // (c)
  std::size_t superadditivity_checks;
  std::size_t superadditivity_failures;  // (d)
  double min_margin;                     // smallest rhs - lhs seen
  bool passes;
};

/// Properties (a)-(d) of the Neumann Laplacian on `box`; (d) is checked for
/// `functions` random f supported on the box against every partition.
NeumannReport verify_neumann_properties(int dim, const IntBox& box,
                                        const std::vector<PartitionSpec>& partitions,
                                        std::size_t functions, std::uint64_t seed);
std::string to_json(const NeumannReport& r);

struct SweepOptions {
  std::int64_t initial_margin = 8;
  std::size_t max_sites = 1u << 16;
  double stability = 1e-8;
  EigenOptions eigen;
};

struct SweptEigenvalue {
  double dirichlet;      // top dirichlet eigenvalue on the largest box
  double value;          // max(0, dirichlet): top of the spectrum on Z^d
  std::int64_t half_width;
  bool converged;        // last doubling moved the value by < stability
};

/// Top of the spectrum of diffusion * Delta + V on Z^d for V supported on
/// `sites`: dirichlet boxes centred at 0 are doubled until stable. The
/// essential spectrum of the Laplacian ends at 0, so the result is at least 0.
SweptEigenvalue swept_top(int dim, const std::vector<Coord>& sites, const std::vector<double>& v,
                          double diffusion, const SweepOptions& options = {});

struct EigenBoundRow {
  double kappa;
  double lambda1;        // swept estimate of the top of Delta + V / kappa
  double neumann_upper;  // max(0, max over parts of the Neumann top)
  double bound;          // 4 delta / kappa
  bool holds;            // lambda1 <= bound
  bool certified;        // neumann_upper <= bound
  bool converged;
};

struct EigenBoundReport {
  double delta;
  double v_inf;
  double eta;            // smallest Neumann spectral gap over the parts
  double gamma;          // 2 delta / ||V||^2
  double sufficient_kappa;  // (max(1, ||V||) + 1/gamma - 4 delta) / eta
  std::optional<double> empirical_kappa0;
  bool holds_above_threshold;
  std::uint64_t potential_hash;
  std::vector<EigenBoundRow> rows;
};

/// V is indexed like partition.parent.sites(dim) and is zero outside.
EigenBoundReport verify_eigenvalue_bound(const PartitionSpec& partition, const std::vector<double>& v,
                                         double delta, const std::vector<double>& kappa_grid,
                                         const SweepOptions& options = {});
std::string to_json(const EigenBoundReport& r);

/// 2 delta + a zero-mean perturbation on every part, with |V| <= v_max.
std::vector<double> random_admissible_potential(const PartitionSpec& p, double delta, double v_max,
                                                Rng& rng);

struct FkSpectralOptions {
  /// Extra sites on every side of Q for the free-truncated box; negative
  /// means the half-width of Q plus one.
  std::int64_t margin = -1;
  oracle::PropagatorOptions propagator;
  EigenOptions eigen;
};

struct FkSpectralReport {
  double kappa;
  double A;
  double m;
  std::int64_t q_half_width;  // largest integer below kappa log kappa
  std::int64_t free_half_width;
  double lhs;                 // log E_0[exp{int xi_bar(X(s), A - s) ds}; X stays in Q]
  double rhs;                 // (kappa/m) sum_k lambda_1 on the free-truncated box
  double rhs_dirichlet;       // the same with dirichlet tops on Q
  std::vector<double> lambda_free;
  std::vector<double> lambda_dirichlet;
  bool holds;                 // lhs <= rhs
  bool rayleigh_ritz;         // lambda_dirichlet <= lambda_free for every k
};

/// Uses xi_bar on [0, A] from `traj` (wrapped on its torus).
FkSpectralReport verify_fk_spectral_bound(const env::EnvTrajectory& traj, double kappa, double A,
                                          double m, const FkSpectralOptions& options = {});
std::string to_json(const FkSpectralReport& r);

/// Inclusive integer interval [a, b].
struct Interval1d {
  std::int64_t a;
  std::int64_t b;
};

struct LocalTimeRow {
  double t;
  double log_e;     // log E_0 exp{sum beta_i l_t(I_i)}
  double rate;      // log_e / t
  double residual;  // rate - mu
  double explicit_rhs;  // with the supplied K2
  double min_k2;        // smallest K2 for which log_e <= explicit bound
};

struct LocalTimeReport {
  double kappa;
  double mu;
  bool mu_converged;
  double best_trial;  // largest Rayleigh quotient over random trial vectors
  std::size_t trials;
  bool mu_dominates;
  bool residual_decreasing;  // max(residual, 0) non-increasing along t
  double k2;
  std::vector<LocalTimeRow> rows;
};

LocalTimeReport verify_localtime_eigen_bound(const std::vector<Interval1d>& intervals,
                                             const std::vector<double>& betas, double kappa,
                                             const std::vector<double>& t_grid, double k2,
                                             std::size_t trials, std::uint64_t seed,
                                             const oracle::PropagatorOptions& options = {});
std::string to_json(const LocalTimeReport& r);

struct PoissonTail {
  double lambda;
  long k;
  double exact;
  double bound;  // e^{-lambda} (lambda e)^k / k^k
  bool applicable;  // k > 2 lambda + 1
  bool holds;
};

PoissonTail poisson_tail(double lambda, long k);

}  // namespace pamlab::spectral
