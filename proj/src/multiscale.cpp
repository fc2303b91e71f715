#include "pamlab/multiscale.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "json.hpp"

namespace pamlab::ms {

namespace {

std::int64_t iceil(double v) { return static_cast<std::int64_t>(std::ceil(v)); }
std::int64_t ifloor(double v) { return static_cast<std::int64_t>(std::floor(v)); }

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t integer_A(const BlockSpec& spec) {
  if (!spec.integer_A()) throw ParameterError("nesting requires an integer A");
  return std::llround(spec.A);
}

// sup over [s, s + w) of the (optionally truncated) field at `site`.
double windowed_sup(const env::EnvTrajectory& traj, std::size_t site, double s, double w,
                    Field field, double K) {
  const auto ev = traj.events(site);
  auto it = std::upper_bound(ev.begin(), ev.end(), s,
                             [](double t, const env::Event& e) { return t < e.time; });
  --it;
  auto f = [&](double v) { return field == Field::truncated ? (v >= K ? v : 0.0) : v; };
  double m = f(it->value);
  const double end = s + w;
  for (++it; it != ev.end() && it->time < end; ++it) m = std::max(m, f(it->value));
  return m;
}

// In-place running sums of width q along axis `axis` of a row-major (axis 0
// fastest) array with extents `ext`; the extent on that axis shrinks to
// ext - q + 1.
void box_sum_axis(std::vector<double>& a, std::array<std::int64_t, kMaxDim>& ext, int dim, int axis,
                  std::int64_t q) {
  std::array<std::int64_t, kMaxDim> out_ext = ext;
  out_ext[static_cast<std::size_t>(axis)] = ext[static_cast<std::size_t>(axis)] - q + 1;
  std::int64_t stride = 1;
  for (int j = 0; j < axis; ++j) stride *= ext[static_cast<std::size_t>(j)];
  std::int64_t total_out = 1;
  for (int j = 0; j < dim; ++j) total_out *= out_ext[static_cast<std::size_t>(j)];
  std::vector<double> out(static_cast<std::size_t>(total_out));
  const std::int64_t n_axis = ext[static_cast<std::size_t>(axis)];
  const std::int64_t n_out = out_ext[static_cast<std::size_t>(axis)];
  std::int64_t outer = 1;
  for (int j = axis + 1; j < dim; ++j) outer *= ext[static_cast<std::size_t>(j)];
  for (std::int64_t o = 0; o < outer; ++o) {
    for (std::int64_t inner = 0; inner < stride; ++inner) {
      const std::int64_t base_in = o * n_axis * stride + inner;
      const std::int64_t base_out = o * n_out * stride + inner;
      // Direct sums keep the summation order fixed and independent of the
      // position, so equal windows give bit-identical averages.
      for (std::int64_t p = 0; p < n_out; ++p) {
        double s = 0.0;
        for (std::int64_t r = 0; r < q; ++r) s += a[static_cast<std::size_t>(base_in + (p + r) * stride)];
        out[static_cast<std::size_t>(base_out + p * stride)] = s;
      }
    }
  }
  a.swap(out);
  ext = out_ext;
}

}  // namespace

void BlockSpec::validate() const {
  if (!(A > 1.0) || !std::isfinite(A)) throw ParameterError("block scale A must exceed 1");
  if (!(alpha >= 1.0) || !std::isfinite(alpha)) throw ParameterError("aspect alpha must be >= 1");
  if (!(m > 0.0) || !std::isfinite(m)) throw ParameterError("window fineness m must be > 0");
  if (b < 0 || c < 0) throw ParameterError("margins b, c must be non-negative");
  if (dim < 1 || dim > kMaxDim) throw ParameterError("block dimension must lie in [1, 4]");
  if (!(delta >= 0.0)) throw ParameterError("goodness threshold delta must be >= 0");
  if (!(K >= 0.0)) throw ParameterError("truncation level K must be >= 0");
}

double BlockSpec::space_scale(int R) const { return alpha * std::pow(A, R); }
double BlockSpec::time_scale(int R) const { return std::pow(A, R); }
bool BlockSpec::integer_A() const { return A == std::floor(A) && A >= 2.0; }

std::size_t SpaceTimeBlock::site_count(int dim) const {
  std::size_t n = 1;
  for (int j = 0; j < dim; ++j) n *= static_cast<std::size_t>(std::max<std::int64_t>(0, hi[j] - lo[j]));
  return n;
}

bool SpaceTimeBlock::contains(const Coord& x, double s, int dim) const {
  if (!(s >= t0 && s < t1)) return false;
  for (int j = 0; j < dim; ++j)
    if (x[j] < lo[j] || x[j] >= hi[j]) return false;
  return true;
}

SpaceTimeBlock block_bounds(const BlockSpec& spec, const BlockId& id, bool margins) {
  spec.validate();
  if (id.R < 1) throw ParameterError("block level R must be >= 1");
  const double w = spec.space_scale(id.R);
  const double T = spec.time_scale(id.R);
  const int b = margins ? spec.b : 0;
  const int c = margins ? spec.c : 0;
  SpaceTimeBlock out;
  for (int j = 0; j < spec.dim; ++j) {
    out.lo[j] = iceil(static_cast<double>(id.x[j] - 1 - b) * w);
    out.hi[j] = iceil(static_cast<double>(id.x[j] + 1 + b) * w);
  }
  out.t0 = static_cast<double>(id.k - c) * T;
  out.t1 = static_cast<double>(id.k + 1) * T;
  return out;
}

SpaceTimeBlock q_box(const BlockSpec& spec, int R, const Coord& y) {
  spec.validate();
  const std::int64_t q = iceil(spec.space_scale(R));
  SpaceTimeBlock out;
  for (int j = 0; j < spec.dim; ++j) {
    out.lo[j] = y[j];
    out.hi[j] = y[j] + q;
  }
  return out;
}

BlockId tiling_block_at(const BlockSpec& spec, int R, const Coord& site, double s) {
  const double w2 = 2.0 * spec.space_scale(R);
  BlockId id;
  id.R = R;
  for (int j = 0; j < spec.dim; ++j) id.x[j] = 2 * ifloor(static_cast<double>(site[j]) / w2) + 1;
  id.k = ifloor(s / spec.time_scale(R));
  return id;
}

BlockId tiling_parent(const BlockSpec& spec, const BlockId& id) {
  const std::int64_t a = integer_A(spec);
  BlockId p;
  p.R = id.R + 1;
  for (int j = 0; j < spec.dim; ++j) {
    const std::int64_t cell = (id.x[j] - 1) / 2;
    if ((id.x[j] - 1) % 2 != 0) throw ContractError("tiling blocks have odd spatial indices");
    p.x[j] = 2 * floor_div(cell, a) + 1;
  }
  p.k = floor_div(id.k, a);
  return p;
}

std::vector<BlockId> tiling_children(const BlockSpec& spec, const BlockId& id) {
  const std::int64_t a = integer_A(spec);
  if (id.R < 2) throw ParameterError("1-blocks have no children");
  std::vector<BlockId> out;
  std::int64_t spatial = 1;
  for (int j = 0; j < spec.dim; ++j) spatial *= a;
  for (std::int64_t t = 0; t < a; ++t) {
    for (std::int64_t s = 0; s < spatial; ++s) {
      BlockId ch;
      ch.R = id.R - 1;
      ch.k = id.k * a + t;
      std::int64_t rest = s;
      for (int j = 0; j < spec.dim; ++j) {
        const std::int64_t cell = (id.x[j] - 1) / 2;
        ch.x[j] = 2 * (cell * a + rest % a) + 1;
        rest /= a;
      }
      out.push_back(ch);
    }
  }
  return out;
}

Classification classify_block(const env::EnvTrajectory& traj, const BlockSpec& spec,
                              const BlockId& id, const ClassifyOptions& opt) {
  const SpaceTimeBlock blk = block_bounds(spec, id, opt.with_margins);
  const int d = spec.dim;
  if (d != traj.dim()) throw ContractError("block and trajectory dimensions differ");
  double t0 = blk.t0;
  if (t0 < 0.0) {
    if (!opt.clip_at_zero) throw RangeError("block reaches before time 0");
    t0 = 0.0;
  }
  if (blk.t1 > traj.horizon() * (1.0 + 1e-12)) throw RangeError("block extends past the horizon");
  const double w = 1.0 / spec.m;
  const double s_end = blk.t1 - w;

  Classification res{true, -std::numeric_limits<double>::infinity(), Coord{}, 0.0, 0};
  std::array<std::int64_t, kMaxDim> ext{};
  const std::int64_t q = iceil(spec.space_scale(id.R));
  std::int64_t n_sites = 1;
  for (int j = 0; j < d; ++j) {
    ext[static_cast<std::size_t>(j)] = blk.hi[j] - blk.lo[j];
    if (ext[static_cast<std::size_t>(j)] > traj.torus().side())
      throw RangeError("block is wider than the simulated torus");
    if (ext[static_cast<std::size_t>(j)] < q) return res;  // no admissible Q-box
    n_sites *= ext[static_cast<std::size_t>(j)];
  }
  if (!(s_end > t0)) return res;

  std::vector<std::size_t> sites(static_cast<std::size_t>(n_sites));
  for (std::int64_t i = 0; i < n_sites; ++i) {
    Coord z;
    std::int64_t rest = i;
    for (int j = 0; j < d; ++j) {
      z[j] = blk.lo[j] + rest % ext[static_cast<std::size_t>(j)];
      rest /= ext[static_cast<std::size_t>(j)];
    }
    sites[static_cast<std::size_t>(i)] = traj.site_index(z);
  }

  std::vector<double> crit{t0};
  for (std::size_t s : sites) {
    for (const auto& e : traj.events(s)) {
      if (e.time >= t0 && e.time < s_end) crit.push_back(e.time);
      const double before = e.time - w;
      if (before >= t0 && before < s_end) crit.push_back(before);
    }
  }
  std::sort(crit.begin(), crit.end());
  crit.erase(std::unique(crit.begin(), crit.end()), crit.end());
  std::vector<double> eval;
  eval.reserve(2 * crit.size());
  for (std::size_t i = 0; i < crit.size(); ++i) {
    eval.push_back(crit[i]);
    const double next = i + 1 < crit.size() ? crit[i + 1] : s_end;
    const double mid = 0.5 * (crit[i] + next);
    if (mid > crit[i] && mid < next) eval.push_back(mid);
  }

  const double volume = std::pow(static_cast<double>(q), d);
  std::vector<double> grid;
  for (double s : eval) {
    grid.resize(sites.size());
    for (std::size_t i = 0; i < sites.size(); ++i)
      grid[i] = windowed_sup(traj, sites[i], s, w, opt.field, spec.K);
    auto e = ext;
    for (int j = 0; j < d; ++j) box_sum_axis(grid, e, d, j, q);
    ++res.evaluations;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double avg = grid[i] / volume;
      if (avg > res.worst) {
        res.worst = avg;
        std::size_t rest = i;
        for (int j = 0; j < d; ++j) {
          res.witness_y[j] = blk.lo[j] + static_cast<std::int64_t>(rest % static_cast<std::size_t>(e[static_cast<std::size_t>(j)]));
          rest /= static_cast<std::size_t>(e[static_cast<std::size_t>(j)]);
        }
        res.witness_s = s;
      }
    }
    if (res.worst > spec.delta) {
      res.good = false;
      return res;
    }
  }
  return res;
}

env::EnvTrajectory truncate_env(const env::EnvTrajectory& traj, const BlockSpec& spec) {
  spec.validate();
  const double T = spec.time_scale(1);
  const auto n_blocks = static_cast<std::int64_t>(std::floor(traj.horizon() / T * (1.0 + 1e-12)));
  if (n_blocks < 1) throw RangeError("horizon shorter than one 1-block");
  const double horizon = static_cast<double>(n_blocks) * T;
  const double threshold = spec.delta * std::pow(spec.A, spec.dim);

  ClassifyOptions opt;
  opt.clip_at_zero = true;
  std::map<BlockId, bool> good;
  auto is_good = [&](const BlockId& id) {
    auto it = good.find(id);
    if (it != good.end()) return it->second;
    const bool g = classify_block(traj, spec, id, opt).good;
    good.emplace(id, g);
    return g;
  };

  const BoxDomain& torus = traj.torus();
  std::vector<std::vector<env::Event>> out(torus.size());
  std::vector<double> times;
  for (std::size_t site = 0; site < torus.size(); ++site) {
    const Coord z = torus.coord(site);
    times.clear();
    for (const auto& e : traj.events(site))
      if (e.time < horizon) times.push_back(e.time);
    for (std::int64_t k = 1; k < n_blocks; ++k) times.push_back(static_cast<double>(k) * T);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    auto& list = out[site];
    for (double s : times) {
      const double v = traj.value(site, s);
      BlockId id = tiling_block_at(spec, 1, z, s);
      id.k = std::min<std::int64_t>(id.k, n_blocks - 1);
      const double bar = (v < threshold && is_good(id)) ? 2.0 * v : 0.0;
      if (list.empty() || list.back().value != bar) list.push_back({s, bar});
    }
  }
  env::EnvConfig cfg = traj.config();
  cfg.kind = env::Kind::derived;
  cfg.horizon = horizon;
  return env::EnvTrajectory(std::move(cfg), std::move(out));
}

std::vector<BlockId> block_entries(const walk::WalkPath& path, const BlockSpec& spec, int R) {
  spec.validate();
  const double T = spec.time_scale(R);
  const auto slabs = static_cast<std::size_t>(std::max(1.0, std::ceil(path.horizon / T)));
  std::vector<BlockId> out;
  std::size_t next = 0;
  for (std::size_t i = 0; i < slabs; ++i) {
    const double begin = static_cast<double>(i) * T;
    const double end = static_cast<double>(i + 1) * T;
    while (next < path.jumps() && path.jump_times[next] <= begin) ++next;
    BlockId cur = tiling_block_at(spec, R, path.sites[next], begin);
    cur.k = static_cast<std::int64_t>(i);
    out.push_back(cur);
    for (; next < path.jumps() && path.jump_times[next] < end; ++next) {
      BlockId b = tiling_block_at(spec, R, path.sites[next + 1], begin);
      b.k = static_cast<std::int64_t>(i);
      if (b == cur) continue;
      cur = b;
      out.push_back(cur);
    }
  }
  return out;
}

std::vector<CensusRow> block_census(const env::EnvTrajectory& traj, const walk::WalkPath& path,
                                    const BlockSpec& spec, int R_max, Field field) {
  if (R_max < 1) throw ParameterError("R_max must be >= 1");
  ClassifyOptions opt;
  opt.field = field;
  opt.clip_at_zero = true;
  std::map<BlockId, bool> good;
  auto is_good = [&](const BlockId& id) {
    auto it = good.find(id);
    if (it != good.end()) return it->second;
    const bool g = classify_block(traj, spec, id, opt).good;
    good.emplace(id, g);
    return g;
  };

  std::vector<CensusRow> rows;
  for (int R = 1; R <= R_max; ++R) {
    CensusRow row{R, 0, 0, {}};
    std::set<BlockId> bad;
    for (const auto& id : block_entries(path, spec, R)) {
      if (!is_good(id)) {
        ++row.xi_count;
        bad.insert(id);
      }
    }
    for (const auto& parent : block_entries(path, spec, R + 1)) {
      if (!is_good(parent)) continue;
      for (const auto& ch : tiling_children(spec, parent)) {
        if (!is_good(ch)) {
          ++row.psi_count;
          break;
        }
      }
    }
    row.bad_blocks.assign(bad.begin(), bad.end());
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string to_json(const CensusRow& row, int dim) {
  nlohmann::ordered_json j;
  j["R"] = row.R;
  j["xi_count"] = row.xi_count;
  j["psi_count"] = row.psi_count;
  nlohmann::json ids = nlohmann::json::array();
  for (const auto& id : row.bad_blocks) {
    nlohmann::json x = nlohmann::json::array();
    for (int i = 0; i < dim; ++i) x.push_back(id.x[i]);
    ids.push_back({{"x", x}, {"k", id.k}});
  }
  j["bad_blocks"] = ids;
  return j.dump();
}

bool mixing_event(const env::EnvTrajectory& traj, const BlockSpec& spec, const BlockId& parent,
                  Field field) {
  ClassifyOptions opt;
  opt.field = field;
  if (!classify_block(traj, spec, parent, opt).good) return false;
  for (const auto& ch : tiling_children(spec, parent))
    if (!classify_block(traj, spec, ch, opt).good) return true;
  return false;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::consistent: return "consistent";
    case Verdict::violated: return "violated";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "unknown";
}

MixingResult mixing_probe(const env::EnvConfig& config, const BlockSpec& spec, int R,
                          std::size_t reps, Field field, const env::ResourceBudget& budget) {
  spec.validate();
  if (reps < 100) throw ParameterError("mixing probe needs at least 100 replicas");
  if (R < 1) throw ParameterError("block level R must be >= 1");
  if (spec.dim != config.dim) throw ContractError("block and environment dimensions differ");
  BlockId parent;
  parent.R = R + 1;
  for (int j = 0; j < spec.dim; ++j) parent.x[j] = 1;
  parent.k = spec.c;
  const SpaceTimeBlock outer = block_bounds(spec, parent);

  env::EnvConfig c = config;
  std::int64_t reach = 0;
  for (int j = 0; j < spec.dim; ++j) reach = std::max({reach, -outer.lo[j], outer.hi[j]});
  c.box_radius = std::max(c.box_radius, reach + 1);
  c.horizon = outer.t1;

  MixingResult res{};
  res.R = R;
  res.reps = reps;
  for (std::size_t r = 0; r < reps; ++r) {
    c.seed = stream_seed(config.seed, r);
    const auto traj = env::sample_env(c, budget);
    if (mixing_event(traj, spec, parent, field)) ++res.hits;
  }
  res.frequency = static_cast<double>(res.hits) / static_cast<double>(reps);
  res.ci = stats::wilson(res.hits, reps);
  const double d = spec.dim;
  res.bound = std::pow(spec.A, -4.0 * d * (2.0 * d + 1.0) * (d + 1.0) * R);
  if (res.ci.lower > res.bound) {
    res.verdict = Verdict::violated;
  } else if (res.frequency <= res.bound) {
    res.verdict = Verdict::consistent;
  } else {
    res.verdict = Verdict::inconclusive;
  }
  return res;
}

double ScheduleParams::A_of(double eps, double a, int dim) {
  const double d = dim;
  return std::exp(1.0 / (a * eps * (2.0 * d * (2.0 * d + 1.0) + 1.0)));
}

ScheduleParams::ScheduleParams(double eps, double a, double K1, int dim)
    : eps_(eps), a_(a), K1_(K1), dim_(dim), A_(0.0) {
  if (!(eps > 0.0)) throw ParameterError("eps must be > 0");
  if (!(a > 1.0)) throw ParameterError("a must be > 1");
  if (!(K1 > 0.0)) throw ParameterError("K1 must be > 0");
  if (dim < 1 || dim > kMaxDim) throw ParameterError("dimension must lie in [1, 4]");
  A_ = A_of(eps, a, dim);
  if (!(A_ > 3.0))
    throw ParameterError("schedule invalid: A(eps) = " + std::to_string(A_) + " must exceed 3");
}

double ScheduleParams::delta(int R) const {
  const double d = dim_;
  return K1_ * std::pow(A_, -8.0 * d * d / 3.0) * std::pow(A_, -4.0 * d * (2.0 * d + 1.0) * R / 3.0);
}

double ScheduleParams::log_rho(int R) const {
  const double d = dim_;
  return -4.0 * d * (2.0 * d + 1.0) * (d + 1.0) * R * std::log(A_);
}

double ScheduleParams::log_L(int R) const { return -log_rho(R) / (dim_ + 1.0); }

double ScheduleParams::sum_term(int R) const {
  const double d = dim_;
  const double log_delta = std::log(K1_) + (-8.0 * d * d / 3.0 - 4.0 * d * (2.0 * d + 1.0) * R / 3.0) * std::log(A_);
  return std::exp(R * d * std::log(A_) + 0.5 * log_delta);
}

double ScheduleParams::ratio() const {
  const double d = dim_;
  return std::pow(A_, d - 2.0 * d * (2.0 * d + 1.0) / 3.0);
}

ScheduleReport schedule_report(double eps, double a, double K1, int dim, int R_max) {
  if (!(eps > 0.0)) throw ParameterError("eps must be > 0");
  if (!(a > 1.0)) throw ParameterError("a must be > 1");
  if (!(K1 > 0.0)) throw ParameterError("K1 must be > 0");
  if (dim < 1 || dim > kMaxDim) throw ParameterError("dimension must lie in [1, 4]");
  if (R_max < 1) throw ParameterError("R_max must be >= 1");
  const double d = dim;
  ScheduleReport rep{};
  rep.eps = eps;
  rep.a = a;
  rep.K1 = K1;
  rep.dim = dim;
  rep.A = ScheduleParams::A_of(eps, a, dim);
  rep.A_valid = rep.A > 3.0;
  const double logA = std::log(rep.A);
  rep.ratio = std::exp((d - 2.0 * d * (2.0 * d + 1.0) / 3.0) * logA);
  rep.certificate = rep.ratio < 1.0;
  if (!rep.certificate) throw ParameterError("schedule invalid: geometric ratio is not below 1");
  double partial = 0.0;
  for (int R = 1; R <= R_max; ++R) {
    ScheduleRow row{};
    row.R = R;
    row.delta = K1 * std::exp((-8.0 * d * d / 3.0 - 4.0 * d * (2.0 * d + 1.0) * R / 3.0) * logA);
    const double log_rho = -4.0 * d * (2.0 * d + 1.0) * (d + 1.0) * R * logA;
    row.rho = std::exp(log_rho);
    row.log10_rho = log_rho / std::log(10.0);
    row.L = std::exp(-log_rho / (d + 1.0));
    row.log10_L = -row.log10_rho / (d + 1.0);
    row.term = std::exp(R * d * logA + 0.5 * std::log(row.delta));
    partial += row.term;
    row.partial_sum = partial;
    rep.rows.push_back(row);
  }
  rep.tail_bound = rep.rows.back().term * rep.ratio / (1.0 - rep.ratio);
  return rep;
}

CrossingBound crossing_bound_check(const walk::WalkPath& path, const BlockSpec& spec, int R,
                                   std::int64_t L) {
  spec.validate();
  if (R < 1) throw ParameterError("block level R must be >= 1");
  if (L < 1) throw ParameterError("enlargement L must be >= 1");
  const walk::CrossingGrid ones{2.0 * spec.space_scale(1), spec.time_scale(1), Coord{}};
  const double big = static_cast<double>(L) * spec.time_scale(R);
  const walk::CrossingGrid enlarged{big, big, Coord{}};
  CrossingBound out{};
  out.k_star = walk::count_block_crossings(path, ones).total;
  out.crossings = walk::count_block_crossings(path, enlarged).total;
  out.bound = 3.0 * static_cast<double>(out.k_star) /
              (std::pow(spec.A, R - 1) * static_cast<double>(L));
  out.holds = static_cast<double>(out.crossings) <= out.bound;
  return out;
}

}  // namespace pamlab::ms
