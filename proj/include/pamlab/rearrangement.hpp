#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pamlab/lattice.hpp"
#include "pamlab/oracle.hpp"
#include "pamlab/rng.hpp"

namespace pamlab::rearr {

/// Position of n in the order 0, 1, -1, 2, -2, ...
std::uint64_t spiral_rank(std::int64_t n);
std::int64_t spiral_site(std::uint64_t rank);

/// Non-negative function on Z with finite support. Zero entries may be
/// present and are ignored.
using FiniteFunction = std::map<std::int64_t, double>;

void validate(const FiniteFunction& f);
/// |{x : f(x) > lambda}| for lambda >= 0.
std::size_t level_set_count(const FiniteFunction& f, double lambda);
/// Support of f listed in spiral order.
std::vector<std::int64_t> spiral_support(const FiniteFunction& f);

/// Decreasing rearrangement along the spiral order. Zeros are dropped, so
/// the support of the result is {spiral_site(0), ..., spiral_site(n-1)}.
FiniteFunction rearrange_fn(const FiniteFunction& f);
std::set<std::int64_t> rearrange_set(const std::set<std::int64_t>& s);

/// slices[k] is the spatial set on [breaks[k], breaks[k+1]).
struct SpaceTimeSet {
  int dim = 1;
  std::vector<double> breaks;
  std::vector<std::set<Coord>> slices;

  void validate() const;
  std::size_t intervals() const { return slices.size(); }
};

/// First-coordinate projection of every slice.
SpaceTimeSet project(const SpaceTimeSet& b);
/// Projection followed by slice-wise rearrangement.
SpaceTimeSet project_and_rearrange(const SpaceTimeSet& b);

/// K(r) = table[min(r, size - 1)]: a distance kernel, extended by its last
/// value.
struct DistanceKernel {
  std::vector<double> table;

  double operator()(std::int64_t x, std::int64_t y) const;
  /// Non-empty, finite, non-negative and non-increasing.
  void validate() const;
};

struct InequalityRecord {
  double lhs;
  double rhs;
  bool holds;  // lhs <= rhs + 2^-40 max(|lhs|, |rhs|)
  std::uint64_t instance_seed;
};

std::string to_json(const InequalityRecord& r);

/// sum_{x,y} f(x) K(|x-y|) g(y) against the same sum with f#, g#.
InequalityRecord riesz_check(const DistanceKernel& k, const FiniteFunction& f,
                             const FiniteFunction& g, std::uint64_t instance_seed = 0);

/// sum over x_0..x_n of prod_i S_i(x_i) L_i(x_i, x_{i+1}) times S_n(x_n),
/// summed directly with every index in spiral order; n = kernels.size() <= 3.
double chained_sum(const std::vector<DistanceKernel>& kernels,
                   const std::vector<FiniteFunction>& weights);
InequalityRecord multisum_check(const std::vector<DistanceKernel>& kernels,
                                const std::vector<FiniteFunction>& weights,
                                std::uint64_t instance_seed = 0);

struct RieszInstance {
  DistanceKernel kernel;
  FiniteFunction f;
  FiniteFunction g;
};
struct MultisumInstance {
  std::vector<DistanceKernel> kernels;
  std::vector<FiniteFunction> weights;
};

FiniteFunction random_function(Rng& rng, std::int64_t radius);
DistanceKernel random_kernel(Rng& rng, std::size_t length);
RieszInstance random_riesz_instance(std::uint64_t seed, std::int64_t radius);
MultisumInstance random_multisum_instance(std::uint64_t seed, std::size_t n, std::int64_t radius);

/// Level sets of f and g agree at every value either takes and just below it.
bool equimeasurable(const FiniteFunction& f, const FiniteFunction& g);

struct PropertyTally {
  std::string property;
  std::size_t checks = 0;
  std::size_t violations = 0;
  std::vector<std::uint64_t> failing_seeds;  // at most 16
};

/// Random functions are checked for equimeasurability, idempotence, spiral
/// monotonicity and order preservation (f <= f + h implies f# <= (f + h)#),
/// then the Riesz and multi-sum inequalities (n cycling 1, 2, 3) on random
/// instances. Instance i of family j uses stream_seed(stream_seed(seed, j), i).
std::vector<PropertyTally> property_suite(std::uint64_t seed, std::size_t functions,
                                          std::size_t riesz, std::size_t multisum,
                                          std::int64_t radius = 8, unsigned threads = 1);

/// p_s(r, 0) for r = 0..reach of the 1-d walk with rate 2 kappa, from the
/// oracle propagator.
std::vector<double> walk_transition_kernel(double kappa, double s, std::int64_t reach);

struct MgfInstance {
  int dim = 1;
  double kappa = 1.0;
  double t = 1.0;
  std::vector<SpaceTimeSet> blocks;
  std::vector<double> coefficients;
};

struct MgfRecord {
  double lhs;        // E_0 exp{sum C_R l_t(B_R)}, d-dimensional walk
  double projected;  // same with pi_1(B_R) and the 1-d walk
  double rhs;        // same with pi_1(B_R)# and the 1-d walk
  bool holds_projection;  // lhs <= projected
  bool holds;             // lhs <= rhs
  std::uint64_t instance_seed;
};

/// Relative slack used for the local-time verdicts.
inline constexpr double kMgfTolerance = 1e-9;

/// All three expectations come from the oracle on dirichlet boxes large
/// enough that the escape probability times exp{t sum C_R} is below 1e-13.
MgfRecord localtime_mgf_check(const MgfInstance& inst, std::uint64_t instance_seed = 0,
                              const oracle::PropagatorOptions& options = {});

/// 1 to 3 random space-time sets in [-3, 3]^d x [0, t], coefficients in [0, 1.5].
MgfInstance random_mgf_instance(std::uint64_t seed, int dim, double kappa, double t);

std::string to_json(const MgfRecord& r);

}  // namespace pamlab::rearr
