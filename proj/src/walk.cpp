#include "pamlab/walk.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include "pamlab/parallel.hpp"

namespace pamlab::walk {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Integral of the field at `site` over env time [lo, hi], where the caller's
// own duration is used when the field is constant there. This keeps forward
// and reversed evaluations bit-identical on time-constant fields.
double segment_integral(const env::EnvTrajectory& traj, std::size_t site, double lo, double hi,
                        double duration) {
  const auto ev = traj.events(site);
  auto it = std::upper_bound(ev.begin(), ev.end(), lo,
                             [](double t, const env::Event& e) { return t < e.time; });
  --it;
  auto next = std::next(it);
  if (next == ev.end() || next->time >= hi) return it->value * duration;
  double sum = 0.0;
  double left = lo;
  for (;;) {
    next = std::next(it);
    const double right = (next == ev.end() || next->time >= hi) ? hi : next->time;
    sum += it->value * (right - left);
    if (right == hi) break;
    left = right;
    it = next;
  }
  return sum;
}

void check_walk_args(double kappa, int dim, double t) {
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw ParameterError("kappa must be >= 0");
  if (dim < 1 || dim > kMaxDim) throw ParameterError("walk dimension must lie in [1, 4]");
  if (!(t > 0.0) || !std::isfinite(t)) throw ParameterError("walk horizon t must be > 0");
}

}  // namespace

const Coord& WalkPath::at(double s) const {
  auto it = std::upper_bound(jump_times.begin(), jump_times.end(), s);
  return sites[static_cast<std::size_t>(it - jump_times.begin())];
}

bool sample_walk_into(WalkPath& path, double kappa, int dim, double t, Rng& rng,
                      const Coord& start, const Coord* want_end) {
  path.dim = dim;
  path.kappa = kappa;
  path.horizon = t;
  path.jump_times.clear();
  path.sites.clear();

  const double mean = 2.0 * dim * kappa * t;
  const std::int64_t n = mean > 0.0 ? std::poisson_distribution<std::int64_t>(mean)(rng) : 0;

  // Step counts per direction 2j (+e_j) and 2j+1 (-e_j).
  std::array<std::int64_t, 2 * kMaxDim> counts{};
  std::int64_t left = n;
  const int dirs = 2 * dim;
  for (int k = 0; k < dirs - 1 && left > 0; ++k) {
    counts[static_cast<std::size_t>(k)] =
        std::binomial_distribution<std::int64_t>(left, 1.0 / (dirs - k))(rng);
    left -= counts[static_cast<std::size_t>(k)];
  }
  counts[static_cast<std::size_t>(dirs - 1)] += left;

  Coord end = start;
  for (int j = 0; j < dim; ++j)
    end[j] += counts[static_cast<std::size_t>(2 * j)] - counts[static_cast<std::size_t>(2 * j + 1)];
  if (want_end && end != *want_end) return false;

  std::vector<std::uint8_t> steps;
  steps.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < dirs; ++k)
    steps.insert(steps.end(), static_cast<std::size_t>(counts[static_cast<std::size_t>(k)]),
                 static_cast<std::uint8_t>(k));
  std::shuffle(steps.begin(), steps.end(), rng);

  // Uniform order statistics on [0, t] from normalised exponential spacings.
  std::exponential_distribution<double> spacing(1.0);
  path.jump_times.resize(static_cast<std::size_t>(n));
  double acc = 0.0;
  for (auto& s : path.jump_times) {
    acc += spacing(rng);
    s = acc;
  }
  acc += spacing(rng);
  for (auto& s : path.jump_times) s = t * (s / acc);

  path.sites.reserve(static_cast<std::size_t>(n) + 1);
  path.sites.push_back(start);
  Coord x = start;
  for (std::uint8_t k : steps) {
    x[k / 2] += (k % 2 == 0) ? 1 : -1;
    path.sites.push_back(x);
  }
  return true;
}

WalkPath sample_walk(double kappa, int dim, double t, Rng& rng, const Coord& start) {
  check_walk_args(kappa, dim, t);
  WalkPath path;
  sample_walk_into(path, kappa, dim, t, rng, start, nullptr);
  return path;
}

WalkPath sample_walk(double kappa, int dim, double t, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0);
  return sample_walk(kappa, dim, t, rng);
}

double path_integral(const WalkPath& path, const env::EnvTrajectory& traj, bool reverse,
                     BoundaryMode mode) {
  const double t = path.horizon;
  if (t > traj.horizon()) throw RangeError("walk horizon exceeds the trajectory horizon");
  if (path.dim != traj.dim()) throw ContractError("walk and trajectory dimensions differ");
  const BoxDomain& torus = traj.torus();
  double total = 0.0;
  for (std::size_t i = 0; i < path.sites.size(); ++i) {
    const Coord& x = path.sites[i];
    if (mode == BoundaryMode::strict && !torus.contains(x))
      throw RangeError("walk left the simulated box at " + to_string(x, path.dim) +
                       "; enlarge the box radius");
    const double a = path.segment_begin(i);
    const double b = path.segment_end(i);
    const double lo = reverse ? t - b : a;
    const double hi = reverse ? t - a : b;
    total += segment_integral(traj, traj.site_index(x), lo, hi, b - a);
  }
  return total;
}

const char* to_string(InitialCondition ic) {
  return ic == InitialCondition::delta0 ? "delta0" : "ones";
}

UEstimate fk_estimate_u(const env::EnvTrajectory& traj, double kappa, double t,
                        std::size_t replicas, std::uint64_t seed, const EstimateOptions& opt) {
  check_walk_args(kappa, traj.dim(), t);
  if (replicas < 2) throw ParameterError("need at least two walk replicas");
  if (t > traj.horizon()) throw RangeError("walk horizon exceeds the trajectory horizon");

  std::vector<double> logw(replicas, kNegInf);
  const Coord origin{};
  const bool delta = opt.initial == InitialCondition::delta0;
  parallel_for(replicas, opt.threads, [&](std::size_t lo, std::size_t hi) {
    WalkPath path;
    for (std::size_t r = lo; r < hi; ++r) {
      Rng rng = make_rng(seed, r);
      if (!sample_walk_into(path, kappa, traj.dim(), t, rng, origin, delta ? &origin : nullptr))
        continue;
      logw[r] = path_integral(path, traj, true, opt.boundary);
    }
  });

  UEstimate est{};
  est.initial = opt.initial;
  est.kappa = kappa;
  est.t = t;
  est.replicas = replicas;
  stats::LogMeanExp acc;
  for (double w : logw) {
    acc.add(w);
    if (w != kNegInf) ++est.hits;
  }
  est.degenerate = est.hits == 0;
  est.log_u = acc.log_mean();
  est.log_stderr = acc.log_stderr();
  if (est.degenerate) {
    est.log_ci = {kNegInf, kNegInf};
    return est;
  }
  if (opt.bootstrap == 0) {
    est.log_ci = {est.log_u - 1.96 * est.log_stderr, est.log_u + 1.96 * est.log_stderr};
    return est;
  }
  Rng rng = make_rng(seed, std::numeric_limits<std::uint64_t>::max());
  std::uniform_int_distribution<std::size_t> pick(0, replicas - 1);
  std::vector<double> boot(opt.bootstrap);
  for (auto& b : boot) {
    stats::LogMeanExp re;
    for (std::size_t i = 0; i < replicas; ++i) re.add(logw[pick(rng)]);
    b = re.log_mean();
  }
  std::sort(boot.begin(), boot.end());
  const auto q = [&](double p) {
    const auto idx = static_cast<std::size_t>(std::floor(p * static_cast<double>(boot.size() - 1)));
    return boot[idx];
  };
  est.log_ci = {q(0.025), q(0.975)};
  return est;
}

std::vector<LyapunovEstimate> lyapunov_sweep(const env::EnvTrajectory& traj,
                                             std::span<const double> kappas, double t,
                                             std::size_t replicas, std::uint64_t walk_seed,
                                             const EstimateOptions& options) {
  if (kappas.empty()) throw ParameterError("empty kappa list");
  std::vector<LyapunovEstimate> rows;
  for (double kappa : kappas) {
    LyapunovEstimate row{};
    row.kappa = kappa;
    row.t = t;
    row.replicas = replicas;
    row.env_seed = traj.config().seed;
    row.walk_seed = walk_seed;
    if (kappa == 0.0) {
      check_walk_args(kappa, traj.dim(), t);
      if (t > traj.horizon()) throw RangeError("walk horizon exceeds the trajectory horizon");
      const double integral = traj.integrate(traj.site_index(Coord{}), 0.0, t);
      row.lambda_hat = integral / t;
      row.std_error = 0.0;
    } else {
      const auto est = fk_estimate_u(traj, kappa, t, replicas, walk_seed, options);
      row.degenerate = est.degenerate;
      row.lambda_hat = est.log_u / t;
      row.std_error = est.log_stderr / t;
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<LyapunovEstimate> lyapunov_sweep(const env::EnvConfig& config,
                                             std::span<const double> kappas, double t,
                                             std::size_t replicas, std::uint64_t walk_seed,
                                             const EstimateOptions& options) {
  const auto traj = env::sample_env(config, env::ResourceBudget::from_environment());
  return lyapunov_sweep(traj, kappas, t, replicas, walk_seed, options);
}

void write_sweep_csv(std::ostream& out, std::span<const LyapunovEstimate> rows) {
  out << "kappa,t,replicas,lambda_hat,stderr,env_seed,walk_seed\n";
  std::ostringstream line;
  line << std::setprecision(17);
  for (const auto& r : rows) {
    line.str("");
    line << r.kappa << ',' << r.t << ',' << r.replicas << ',' << r.lambda_hat << ','
         << r.std_error << ',' << r.env_seed << ',' << r.walk_seed << '\n';
    out << line.str();
  }
}

bool SpaceTimeBox::contains_site(const Coord& x, int dim) const {
  for (int j = 0; j < dim; ++j)
    if (x[j] < lo[j] || x[j] >= hi[j]) return false;
  return true;
}

double local_time(const WalkPath& path, std::span<const SpaceTimeBox> region, bool reverse) {
  const double t = path.horizon;
  double total = 0.0;
  std::vector<std::pair<double, double>> pieces;
  for (std::size_t i = 0; i < path.sites.size(); ++i) {
    const double a = path.segment_begin(i);
    const double b = path.segment_end(i);
    if (!(b > a)) continue;
    pieces.clear();
    for (const auto& box : region) {
      if (!box.contains_site(path.sites[i], path.dim)) continue;
      // Path times s with (reversed) box time in [t0, t1).
      const double lo = reverse ? t - box.t1 : box.t0;
      const double hi = reverse ? t - box.t0 : box.t1;
      const double l = std::max(a, lo);
      const double h = std::min(b, hi);
      if (h > l) pieces.emplace_back(l, h);
    }
    if (pieces.empty()) continue;
    std::sort(pieces.begin(), pieces.end());
    double cur_lo = pieces[0].first;
    double cur_hi = pieces[0].second;
    for (std::size_t k = 1; k < pieces.size(); ++k) {
      if (pieces[k].first > cur_hi) {
        total += cur_hi - cur_lo;
        cur_lo = pieces[k].first;
        cur_hi = pieces[k].second;
      } else {
        cur_hi = std::max(cur_hi, pieces[k].second);
      }
    }
    total += cur_hi - cur_lo;
  }
  return total;
}

double local_time_at(const WalkPath& path, const Coord& x) {
  double total = 0.0;
  for (std::size_t i = 0; i < path.sites.size(); ++i)
    if (path.sites[i] == x) total += path.segment_end(i) - path.segment_begin(i);
  return total;
}

CrossingCount count_block_crossings(const WalkPath& path, const CrossingGrid& grid,
                                    CrossingMode mode) {
  if (!(grid.width > 0.0) || !(grid.slab > 0.0))
    throw ParameterError("crossing grid needs positive cell width and slab length");
  const double t = path.horizon;
  const auto slabs = static_cast<std::size_t>(std::max(1.0, std::ceil(t / grid.slab)));
  auto cell = [&](const Coord& x) {
    Coord c;
    for (int j = 0; j < path.dim; ++j)
      c[j] = static_cast<std::int64_t>(
          std::floor(static_cast<double>(x[j] - grid.origin[j]) / grid.width));
    return c;
  };

  CrossingCount out{0, std::vector<std::size_t>(slabs, 0)};
  std::size_t next_jump = 0;
  std::set<Coord> seen;
  for (std::size_t i = 0; i < slabs; ++i) {
    const double begin = static_cast<double>(i) * grid.slab;
    const double end = static_cast<double>(i + 1) * grid.slab;
    while (next_jump < path.jumps() && path.jump_times[next_jump] <= begin) ++next_jump;
    Coord current = cell(path.sites[next_jump]);
    std::size_t l = 1;
    seen.clear();
    seen.insert(current);
    for (; next_jump < path.jumps() && path.jump_times[next_jump] < end; ++next_jump) {
      const Coord c = cell(path.sites[next_jump + 1]);
      if (c == current) continue;
      current = c;
      if (mode == CrossingMode::entries) {
        ++l;
      } else if (seen.insert(c).second) {
        ++l;
      }
    }
    out.per_slab[i] = l;
    out.total += l;
  }
  return out;
}

std::int64_t max_excursion(const WalkPath& path) {
  std::int64_t m = 0;
  for (const auto& x : path.sites) m = std::max(m, linf_norm(x, path.dim));
  return m;
}

double max_excursion_bound(double kappa, double t, double c) {
  const double s = std::sqrt(kappa * t);
  return 2.0 * std::exp(-c * c * s / (2.0 * (c + 3.0 * s)));
}

ExcursionRow max_excursion_check(double kappa, double t, double c, std::size_t paths,
                                 std::uint64_t seed) {
  check_walk_args(kappa, 1, t);
  if (!(c > 0.0)) throw ParameterError("excursion level C must be > 0");
  if (paths < 2) throw ParameterError("need at least two paths");
  const double level = c * std::sqrt(kappa * t);
  Rng rng = make_rng(seed, 0);
  std::poisson_distribution<std::int64_t> jumps(2.0 * kappa * t);
  std::size_t hits = 0;
  for (std::size_t p = 0; p < paths; ++p) {
    // Only the step sequence matters for the supremum, not the jump times.
    const std::int64_t n = kappa > 0.0 ? jumps(rng) : 0;
    std::int64_t x = 0;
    std::int64_t m = 0;
    std::uint64_t bits = 0;
    int avail = 0;
    for (std::int64_t k = 0; k < n; ++k) {
      if (avail == 0) {
        bits = rng();
        avail = 64;
      }
      x += (bits & 1u) ? 1 : -1;
      bits >>= 1;
      --avail;
      m = std::max<std::int64_t>(m, std::llabs(x));
    }
    if (static_cast<double>(m) >= level) ++hits;
  }
  ExcursionRow row{};
  row.kappa = kappa;
  row.t = t;
  row.c = c;
  row.paths = paths;
  row.hits = hits;
  row.frequency = static_cast<double>(hits) / static_cast<double>(paths);
  row.std_error = std::sqrt(row.frequency * (1.0 - row.frequency) / static_cast<double>(paths));
  row.bound = max_excursion_bound(kappa, t, c);
  row.passes = row.frequency <= row.bound + 3.0 * row.std_error;
  return row;
}

std::int64_t auto_box_radius(double kappa, double t, int dim, double budget) {
  check_walk_args(kappa, dim, t);
  if (!(budget > 0.0 && budget < 1.0)) throw ParameterError("escape budget must lie in (0, 1)");
  const double s = std::sqrt(kappa * t);
  if (s == 0.0) return 1;
  // Leaving [-L, L] on an axis means reaching |X_j| >= L + 1.
  auto escapes = [&](std::int64_t L) {
    return dim * max_excursion_bound(kappa, t, static_cast<double>(L + 1) / s) > budget;
  };
  std::int64_t hi = 1;
  while (escapes(hi)) {
    if (hi > (std::int64_t{1} << 40)) throw ResourceError("box radius for the escape budget is too large");
    hi *= 2;
  }
  std::int64_t lo = hi / 2;
  if (lo < 1) return hi;
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    (escapes(mid) ? lo : hi) = mid;
  }
  return hi;
}

}  // namespace pamlab::walk
