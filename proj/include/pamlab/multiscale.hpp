#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pamlab/environment.hpp"
#include "pamlab/lattice.hpp"
#include "pamlab/stats.hpp"
#include "pamlab/walk.hpp"

namespace pamlab::ms {

struct BlockSpec {
  double A = 2.0;
  double alpha = 1.0;
  int b = 0;
  int c = 0;
  double m = 1.0;
  int dim = 1;
  double delta = 0.0;
  double K = 0.0;

  void validate() const;
  /// Spatial scale alpha A^R and time scale A^R of level R.
  double space_scale(int R) const;
  double time_scale(int R) const;
  bool integer_A() const;
};

struct BlockId {
  int R = 1;
  Coord x;
  std::int64_t k = 0;
  friend bool operator==(const BlockId&, const BlockId&) = default;
  friend auto operator<=>(const BlockId&, const BlockId&) = default;
};

/// Integer half-open ranges [lo_j, hi_j) per axis times a real interval [t0, t1).
struct SpaceTimeBlock {
  Coord lo;
  Coord hi;
  double t0 = 0.0;
  double t1 = 0.0;

  std::size_t site_count(int dim) const;
  bool contains(const Coord& x, double s, int dim) const;
};

/// prod [(x-1-b) w, (x+1+b) w) cap Z times [(k-c) T, (k+1) T) with w = alpha A^R,
/// T = A^R. Real endpoints become integer ranges as [ceil(lo), ceil(hi)).
SpaceTimeBlock block_bounds(const BlockSpec& spec, const BlockId& id, bool margins = true);
/// y + [0, alpha A^R)^d cap Z.
SpaceTimeBlock q_box(const BlockSpec& spec, int R, const Coord& y);

// Plain blocks with odd spatial indices x = 2c+1 tile Z^d x [0, inf): the
// cell of index c is [2 c w, 2 (c+1) w). With integer A every R-block lies in
// exactly one (R+1)-block.
BlockId tiling_block_at(const BlockSpec& spec, int R, const Coord& site, double s);
BlockId tiling_parent(const BlockSpec& spec, const BlockId& id);
std::vector<BlockId> tiling_children(const BlockSpec& spec, const BlockId& id);

enum class Field {
  raw,        // xi
  truncated,  // xi 1{xi >= K}
};

struct Classification {
  bool good;
  double worst;        // largest Q-average of windowed sups found
  Coord witness_y;     // corner of the Q-box attaining `worst`
  double witness_s;    // time attaining `worst`
  std::size_t evaluations;
};

struct ClassifyOptions {
  Field field = Field::raw;
  bool with_margins = true;
  /// Start the time range at 0 when the margin reaches below it instead of
  /// raising RangeError.
  bool clip_at_zero = false;
};

/// Exact goodness test: every Q-average of sup_{[s, s+1/m)} xi over
/// admissible Q-boxes inside the block, for every s in the time range, is at
/// most delta. The s-set is all event times e and e - 1/m in range, the range
/// start, and midpoints between consecutive such points.
Classification classify_block(const env::EnvTrajectory& traj, const BlockSpec& spec,
                              const BlockId& id, const ClassifyOptions& options = {});

/// xi_bar = 2 xi 1{xi < delta A^d, (x, s) in a good 1-block}. Goodness uses
/// the tiling 1-blocks with the BlockSpec margins (clipped at time 0). The
/// result covers the whole 1-blocks inside the horizon.
env::EnvTrajectory truncate_env(const env::EnvTrajectory& traj, const BlockSpec& spec);

/// Sequence of tiling R-blocks entered by the path: the slab's starting
/// block, then each block change (re-entries count again).
std::vector<BlockId> block_entries(const walk::WalkPath& path, const BlockSpec& spec, int R);

struct CensusRow {
  int R;
  std::size_t xi_count;   // entries into bad R-blocks
  std::size_t psi_count;  // entries into good (R+1)-blocks containing a bad R-block
  std::vector<BlockId> bad_blocks;  // distinct bad R-blocks entered
};

std::vector<CensusRow> block_census(const env::EnvTrajectory& traj, const walk::WalkPath& path,
                                    const BlockSpec& spec, int R_max,
                                    Field field = Field::raw);

std::string to_json(const CensusRow& row, int dim);

/// The event that the (R+1)-block is good but one of its R-blocks is bad.
bool mixing_event(const env::EnvTrajectory& traj, const BlockSpec& spec, const BlockId& parent,
                  Field field = Field::raw);

enum class Verdict { consistent, violated, inconclusive };
const char* to_string(Verdict v);

struct MixingResult {
  int R;
  std::size_t reps;
  std::size_t hits;
  double frequency;
  stats::Interval ci;
  double bound;  // A^{-4d(2d+1)(d+1)R}
  Verdict verdict;
};

/// Frequency of the mixing event for the (R+1)-block x = (1,...,1), k = c
/// over independent environments drawn from `config` (seed streams r).
MixingResult mixing_probe(const env::EnvConfig& config, const BlockSpec& spec, int R,
                          std::size_t reps, Field field = Field::raw,
                          const env::ResourceBudget& budget = env::ResourceBudget{});

/// Parameter choices for the multiscale scheme. The constructor rejects
/// A <= 3.
class ScheduleParams {
 public:
  ScheduleParams(double eps, double a, double K1, int dim);

  static double A_of(double eps, double a, int dim);

  double eps() const { return eps_; }
  double a() const { return a_; }
  double K1() const { return K1_; }
  int dim() const { return dim_; }
  double A() const { return A_; }

  double delta(int R) const;
  double log_rho(int R) const;
  double rho(int R) const { return std::exp(log_rho(R)); }
  double log_L(int R) const;
  double L(int R) const { return std::exp(log_L(R)); }
  /// A^{R d} sqrt(delta_R)
  double sum_term(int R) const;
  /// A^{d - 2d(2d+1)/3}: ratio of consecutive sum terms.
  double ratio() const;

 private:
  double eps_, a_, K1_;
  int dim_;
  double A_;
};

struct ScheduleRow {
  int R;
  double delta;
  double rho;
  double log10_rho;
  double L;
  double log10_L;
  double term;
  double partial_sum;
};

struct ScheduleReport {
  double eps, a, K1;
  int dim;
  double A;
  bool A_valid;  // A > 3
  double ratio;
  bool certificate;  // ratio < 1
  double tail_bound;  // bound on the sum past R_max
  std::vector<ScheduleRow> rows;
};

/// Tabulates the schedule without enforcing A > 3 (A_valid reports it).
/// Raises ParameterError for eps <= 0, a <= 1, and when the ratio is >= 1.
ScheduleReport schedule_report(double eps, double a, double K1, int dim, int R_max);

struct CrossingBound {
  std::size_t k_star;     // 1-block crossings (tiling 1-blocks)
  std::size_t crossings;  // enlarged R-block crossings
  double bound;           // 3 k_* / (A^{R-1} L)
  bool holds;
};

/// Enlarged R-blocks are [L x A^R, L (x+1) A^R) per axis times
/// [L k A^R, L (k+1) A^R) for an integer enlargement L.
CrossingBound crossing_bound_check(const walk::WalkPath& path, const BlockSpec& spec, int R,
                                   std::int64_t L);

}  // namespace pamlab::ms
