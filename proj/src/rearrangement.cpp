#include "pamlab/rearrangement.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "json.hpp"
#include "pamlab/errors.hpp"
#include "pamlab/parallel.hpp"

namespace pamlab::rearr {

namespace {

using Entries = std::vector<std::pair<std::int64_t, double>>;

// Positive entries of f in spiral order.
Entries spiral_entries(const FiniteFunction& f) {
  Entries e;
  for (const auto& [x, v] : f)
    if (v > 0.0) e.emplace_back(x, v);
  std::sort(e.begin(), e.end(),
            [](const auto& a, const auto& b) { return spiral_rank(a.first) < spiral_rank(b.first); });
  return e;
}

double slack(double lhs, double rhs) { return std::ldexp(std::max(std::abs(lhs), std::abs(rhs)), -40); }

oracle::PotentialSchedule potential_of(const std::vector<SpaceTimeSet>& blocks,
                                       const std::vector<double>& coeff, const BoxDomain& box,
                                       double t) {
  std::vector<double> times{0.0, t};
  for (const auto& b : blocks)
    for (double s : b.breaks)
      if (s > 0.0 && s < t) times.push_back(s);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  oracle::PotentialSchedule out;
  out.breaks = times;
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    std::vector<double> v(box.size(), 0.0);
    const double s = times[k];
    for (std::size_t r = 0; r < blocks.size(); ++r) {
      const auto& b = blocks[r];
      if (s < b.breaks.front() || s >= b.breaks.back()) continue;
      const auto it = std::upper_bound(b.breaks.begin(), b.breaks.end(), s);
      const auto slice = static_cast<std::size_t>(it - b.breaks.begin()) - 1;
      for (const Coord& x : b.slices[slice]) v[box.index(x)] += coeff[r];
    }
    out.values.push_back(std::move(v));
  }
  return out;
}

std::int64_t reach_of(const std::vector<SpaceTimeSet>& blocks, int dim) {
  std::int64_t reach = 0;
  for (const auto& b : blocks)
    for (const auto& slice : b.slices)
      for (const Coord& x : slice) reach = std::max(reach, linf_norm(x, dim));
  return reach;
}

double mgf(const std::vector<SpaceTimeSet>& blocks, const std::vector<double>& coeff, int dim,
           double kappa, double t, double log_weight, const oracle::PropagatorOptions& opt) {
  const std::int64_t L = std::max(reach_of(blocks, dim), oracle::escape_half_width(kappa, t, dim, log_weight));
  const BoxDomain box(dim, L, Boundary::dirichlet);
  const auto sched = potential_of(blocks, coeff, box, t);
  return oracle::fk_expectation(sched, kappa, box, Coord{}, t, {}, opt);
}

}  // namespace

std::uint64_t spiral_rank(std::int64_t n) {
  if (n > 0) return 2 * static_cast<std::uint64_t>(n) - 1;
  return 2 * static_cast<std::uint64_t>(-n);
}

std::int64_t spiral_site(std::uint64_t rank) {
  if (rank % 2 == 1) return static_cast<std::int64_t>((rank + 1) / 2);
  return -static_cast<std::int64_t>(rank / 2);
}

void validate(const FiniteFunction& f) {
  for (const auto& [x, v] : f)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw ContractError("rearranged functions must be finite and non-negative (site " +
                          std::to_string(x) + ")");
}

std::size_t level_set_count(const FiniteFunction& f, double lambda) {
  std::size_t n = 0;
  for (const auto& [x, v] : f) n += v > lambda ? 1 : 0;
  return n;
}

std::vector<std::int64_t> spiral_support(const FiniteFunction& f) {
  std::vector<std::int64_t> out;
  for (const auto& [x, v] : spiral_entries(f)) out.push_back(x);
  return out;
}

FiniteFunction rearrange_fn(const FiniteFunction& f) {
  validate(f);
  std::vector<double> values;
  for (const auto& [x, v] : f)
    if (v > 0.0) values.push_back(v);
  std::sort(values.begin(), values.end(), std::greater<>());
  FiniteFunction out;
  for (std::size_t i = 0; i < values.size(); ++i) out[spiral_site(i)] = values[i];
  return out;
}

std::set<std::int64_t> rearrange_set(const std::set<std::int64_t>& s) {
  std::set<std::int64_t> out;
  for (std::uint64_t i = 0; i < s.size(); ++i) out.insert(spiral_site(i));
  return out;
}

void SpaceTimeSet::validate() const {
  if (dim < 1 || dim > kMaxDim) throw ContractError("space-time set dimension must lie in [1, 4]");
  if (breaks.size() != slices.size() + 1 || slices.empty())
    throw ContractError("space-time set needs M+1 breakpoints for M slices");
  if (!(breaks.front() >= 0.0)) throw ContractError("space-time set starts before time 0");
  for (std::size_t k = 1; k < breaks.size(); ++k)
    if (!(breaks[k] > breaks[k - 1])) throw ContractError("space-time breakpoints must increase");
}

SpaceTimeSet project(const SpaceTimeSet& b) {
  b.validate();
  SpaceTimeSet out;
  out.dim = 1;
  out.breaks = b.breaks;
  for (const auto& slice : b.slices) {
    std::set<Coord> p;
    for (const Coord& x : slice) p.insert(Coord::on_axis(0, x[0]));
    out.slices.push_back(std::move(p));
  }
  return out;
}

SpaceTimeSet project_and_rearrange(const SpaceTimeSet& b) {
  SpaceTimeSet out = project(b);
  for (auto& slice : out.slices) {
    std::set<std::int64_t> line;
    for (const Coord& x : slice) line.insert(x[0]);
    slice.clear();
    for (std::int64_t y : rearrange_set(line)) slice.insert(Coord::on_axis(0, y));
  }
  return out;
}

double DistanceKernel::operator()(std::int64_t x, std::int64_t y) const {
  const auto r = static_cast<std::size_t>(x > y ? x - y : y - x);
  return table[std::min(r, table.size() - 1)];
}

void DistanceKernel::validate() const {
  if (table.empty()) throw ContractError("distance kernel table is empty");
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (!(table[i] >= 0.0) || !std::isfinite(table[i]))
      throw ContractError("distance kernel must be finite and non-negative");
    if (i > 0 && table[i] > table[i - 1]) throw ContractError("distance kernel must be non-increasing");
  }
}

std::string to_json(const InequalityRecord& r) {
  nlohmann::ordered_json j;
  j["lhs"] = r.lhs;
  j["rhs"] = r.rhs;
  j["holds"] = r.holds;
  j["instance_seed"] = r.instance_seed;
  return j.dump();
}

double chained_sum(const std::vector<DistanceKernel>& kernels,
                   const std::vector<FiniteFunction>& weights) {
  const std::size_t n = kernels.size();
  if (n == 0) throw ParameterError("chained sum needs at least one kernel");
  if (n > 3) throw ResourceError("chained sums are limited to n <= 3 kernels");
  if (weights.size() != n + 1) throw ContractError("chained sum needs n+1 weight functions");
  for (const auto& k : kernels) k.validate();
  std::vector<Entries> e;
  for (const auto& w : weights) {
    validate(w);
    e.push_back(spiral_entries(w));
  }
  // level i sums over x_i given x_{i-1}
  std::function<double(std::size_t, std::int64_t)> level = [&](std::size_t i, std::int64_t prev) {
    double s = 0.0;
    for (const auto& [x, v] : e[i]) {
      double term = i == 0 ? v : kernels[i - 1](prev, x) * v;
      if (i < n) term *= level(i + 1, x);
      s += term;
    }
    return s;
  };
  return level(0, 0);
}

InequalityRecord multisum_check(const std::vector<DistanceKernel>& kernels,
                                const std::vector<FiniteFunction>& weights,
                                std::uint64_t instance_seed) {
  std::vector<FiniteFunction> sharp;
  for (const auto& w : weights) sharp.push_back(rearrange_fn(w));
  InequalityRecord r{};
  r.lhs = chained_sum(kernels, weights);
  r.rhs = chained_sum(kernels, sharp);
  r.holds = r.lhs <= r.rhs + slack(r.lhs, r.rhs);
  r.instance_seed = instance_seed;
  return r;
}

InequalityRecord riesz_check(const DistanceKernel& k, const FiniteFunction& f,
                             const FiniteFunction& g, std::uint64_t instance_seed) {
  return multisum_check({k}, {f, g}, instance_seed);
}

FiniteFunction random_function(Rng& rng, std::int64_t radius) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  FiniteFunction f;
  std::vector<double> seen;
  for (std::int64_t x = -radius; x <= radius; ++x) {
    if (u(rng) < 0.5) continue;
    const double p = u(rng);
    double v = u(rng);
    if (p < 0.15 && !seen.empty()) {
      v = seen[static_cast<std::size_t>(u(rng) * static_cast<double>(seen.size()))];
    } else if (p < 0.25) {
      v = 0.0;
    }
    f[x] = v;
    seen.push_back(v);
  }
  return f;
}

DistanceKernel random_kernel(Rng& rng, std::size_t length) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DistanceKernel k;
  k.table.resize(length);
  for (auto& v : k.table) v = u(rng);
  if (u(rng) < 0.2) {
    // step kernel: a ball indicator
    const auto cut = static_cast<std::size_t>(u(rng) * static_cast<double>(length));
    for (std::size_t i = 0; i < length; ++i) k.table[i] = i <= cut ? 1.0 : 0.0;
  }
  std::sort(k.table.begin(), k.table.end(), std::greater<>());
  return k;
}

RieszInstance random_riesz_instance(std::uint64_t seed, std::int64_t radius) {
  Rng rng = make_rng(seed, 0);
  RieszInstance inst;
  inst.kernel = random_kernel(rng, static_cast<std::size_t>(2 * radius + 2));
  inst.f = random_function(rng, radius);
  inst.g = random_function(rng, radius);
  return inst;
}

MultisumInstance random_multisum_instance(std::uint64_t seed, std::size_t n, std::int64_t radius) {
  Rng rng = make_rng(seed, 0);
  MultisumInstance inst;
  for (std::size_t i = 0; i < n; ++i)
    inst.kernels.push_back(random_kernel(rng, static_cast<std::size_t>(2 * radius + 2)));
  for (std::size_t i = 0; i <= n; ++i) inst.weights.push_back(random_function(rng, radius));
  return inst;
}

bool equimeasurable(const FiniteFunction& f, const FiniteFunction& g) {
  std::vector<double> levels{0.0};
  for (const auto& [x, v] : f) levels.push_back(v);
  for (const auto& [x, v] : g) levels.push_back(v);
  for (double v : levels) {
    const double below = std::max(0.0, std::nextafter(v, 0.0));
    for (double l : {v, below})
      if (level_set_count(f, l) != level_set_count(g, l)) return false;
  }
  return true;
}

namespace {

enum Family : std::size_t { equimeasurability, idempotence, monotonicity, order, riesz_family, multisum_family, families };

const char* family_name(std::size_t j) {
  static const char* names[] = {"equimeasurability", "idempotence", "monotonicity",
                                "order_preservation", "riesz", "multisum"};
  return names[j];
}

// One bit per family: set when instance i violates it.
unsigned function_checks(std::uint64_t seed, std::int64_t radius) {
  Rng rng = make_rng(seed, 0);
  const auto f = random_function(rng, radius);
  const auto s = rearrange_fn(f);
  unsigned bad = 0;
  if (!equimeasurable(f, s)) bad |= 1u << equimeasurability;
  if (rearrange_fn(s) != s) bad |= 1u << idempotence;
  for (std::uint64_t r = 0; r + 1 < s.size(); ++r)
    if (s.at(spiral_site(r)) < s.at(spiral_site(r + 1))) bad |= 1u << monotonicity;
  FiniteFunction g = f;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::int64_t x = -radius; x <= radius; ++x)
    if (u(rng) < 0.5) g[x] += u(rng);
  const auto gs = rearrange_fn(g);
  for (const auto& [x, v] : s) {
    auto it = gs.find(x);
    if (it == gs.end() || it->second < v) bad |= 1u << order;
  }
  return bad;
}

}  // namespace

std::vector<PropertyTally> property_suite(std::uint64_t seed, std::size_t functions, std::size_t riesz,
                                          std::size_t multisum, std::int64_t radius, unsigned threads) {
  if (radius < 0) throw ParameterError("radius must be >= 0");
  std::vector<unsigned> fn_bad(functions, 0);
  std::vector<char> riesz_bad(riesz, 0);
  std::vector<char> multi_bad(multisum, 0);
  const std::uint64_t fseed = stream_seed(seed, 0);
  const std::uint64_t rseed = stream_seed(seed, 1);
  const std::uint64_t mseed = stream_seed(seed, 2);
  parallel_for(functions, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) fn_bad[i] = function_checks(stream_seed(fseed, i), radius);
  });
  parallel_for(riesz, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const std::uint64_t s = stream_seed(rseed, i);
      const auto inst = random_riesz_instance(s, radius);
      riesz_bad[i] = riesz_check(inst.kernel, inst.f, inst.g, s).holds ? 0 : 1;
    }
  });
  parallel_for(multisum, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const std::uint64_t s = stream_seed(mseed, i);
      // chained sums cost radius^(n+1); keep the support small
      const auto inst = random_multisum_instance(s, 1 + i % 3, std::min<std::int64_t>(radius, 5));
      multi_bad[i] = multisum_check(inst.kernels, inst.weights, s).holds ? 0 : 1;
    }
  });

  std::vector<PropertyTally> out(families);
  for (std::size_t j = 0; j < families; ++j) out[j].property = family_name(j);
  auto note = [](PropertyTally& t, bool bad, std::uint64_t s) {
    ++t.checks;
    if (!bad) return;
    ++t.violations;
    if (t.failing_seeds.size() < 16) t.failing_seeds.push_back(s);
  };
  for (std::size_t i = 0; i < functions; ++i)
    for (std::size_t j = 0; j < riesz_family; ++j) note(out[j], (fn_bad[i] >> j) & 1u, stream_seed(fseed, i));
  for (std::size_t i = 0; i < riesz; ++i) note(out[riesz_family], riesz_bad[i], stream_seed(rseed, i));
  for (std::size_t i = 0; i < multisum; ++i) note(out[multisum_family], multi_bad[i], stream_seed(mseed, i));
  return out;
}

std::vector<double> walk_transition_kernel(double kappa, double s, std::int64_t reach) {
  if (!(s > 0.0)) throw ParameterError("transition time must be > 0");
  if (reach < 0) throw ParameterError("reach must be >= 0");
  const std::int64_t L = reach + oracle::escape_half_width(kappa, s, 1, std::log(1e3));
  const BoxDomain box(1, std::max<std::int64_t>(L, 1), Boundary::dirichlet);
  std::vector<double> delta(box.size(), 0.0);
  delta[box.index(Coord{})] = 1.0;
  const auto zero = oracle::PotentialSchedule::constant(s, std::vector<double>(box.size(), 0.0));
  const auto u = oracle::solve_pam(zero, kappa, box, delta, s);
  std::vector<double> p;
  for (std::int64_t r = 0; r <= reach; ++r) p.push_back(u[box.index(Coord::on_axis(0, r))]);
  return p;
}

MgfRecord localtime_mgf_check(const MgfInstance& inst, std::uint64_t instance_seed,
                              const oracle::PropagatorOptions& opt) {
  if (!(inst.kappa >= 0.0)) throw ParameterError("kappa must be >= 0");
  if (!(inst.t > 0.0)) throw ParameterError("t must be > 0");
  if (inst.blocks.size() != inst.coefficients.size())
    throw ContractError("one coefficient per block is required");
  double total = 0.0;
  for (double c : inst.coefficients) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw ContractError("coefficients must be non-negative");
    total += c;
  }
  std::vector<SpaceTimeSet> projected;
  std::vector<SpaceTimeSet> sharp;
  for (const auto& b : inst.blocks) {
    b.validate();
    if (b.dim != inst.dim) throw ContractError("block dimension differs from the instance");
    if (b.breaks.back() > inst.t) throw RangeError("block extends past t");
    projected.push_back(project(b));
    sharp.push_back(project_and_rearrange(b));
  }
  const double log_weight = total * inst.t;
  MgfRecord r{};
  r.lhs = mgf(inst.blocks, inst.coefficients, inst.dim, inst.kappa, inst.t, log_weight, opt);
  r.projected = mgf(projected, inst.coefficients, 1, inst.kappa, inst.t, log_weight, opt);
  r.rhs = mgf(sharp, inst.coefficients, 1, inst.kappa, inst.t, log_weight, opt);
  r.holds_projection = r.lhs <= r.projected * (1.0 + kMgfTolerance);
  r.holds = r.lhs <= r.rhs * (1.0 + kMgfTolerance);
  r.instance_seed = instance_seed;
  return r;
}

MgfInstance random_mgf_instance(std::uint64_t seed, int dim, double kappa, double t) {
  Rng rng = make_rng(seed, 0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> count(1, 3);
  std::uniform_int_distribution<std::int64_t> site(-3, 3);
  MgfInstance inst;
  inst.dim = dim;
  inst.kappa = kappa;
  inst.t = t;
  const int blocks = count(rng);
  for (int b = 0; b < blocks; ++b) {
    SpaceTimeSet s;
    s.dim = dim;
    const int pieces = count(rng);
    std::vector<double> cuts;
    for (int i = 0; i <= pieces; ++i) cuts.push_back(u(rng) * t);
    std::sort(cuts.begin(), cuts.end());
    if (u(rng) < 0.5) cuts.front() = 0.0;
    if (u(rng) < 0.5) cuts.back() = t;
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    if (cuts.size() < 2) cuts = {0.0, t};
    s.breaks = cuts;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      std::set<Coord> slice;
      if (u(rng) < 0.5) {
        // a box
        Coord lo;
        Coord hi;
        for (int j = 0; j < dim; ++j) {
          const std::int64_t a = site(rng);
          const std::int64_t c = site(rng);
          lo[j] = std::min(a, c);
          hi[j] = std::max(a, c);
        }
        const BoxDomain cube(dim, 3, Boundary::dirichlet);
        for (std::size_t i = 0; i < cube.size(); ++i) {
          const Coord z = cube.coord(i);
          bool in = true;
          for (int j = 0; j < dim; ++j) in = in && z[j] >= lo[j] && z[j] <= hi[j];
          if (in) slice.insert(z);
        }
      } else {
        const int n = 1 + static_cast<int>(u(rng) * 6.0);
        for (int i = 0; i < n; ++i) {
          Coord z;
          for (int j = 0; j < dim; ++j) z[j] = site(rng);
          slice.insert(z);
        }
      }
      s.slices.push_back(std::move(slice));
    }
    inst.blocks.push_back(std::move(s));
    inst.coefficients.push_back(1.5 * u(rng));
  }
  return inst;
}

std::string to_json(const MgfRecord& r) {
  nlohmann::ordered_json j;
  j["lhs"] = r.lhs;
  j["projected"] = r.projected;
  j["rhs"] = r.rhs;
  j["holds"] = r.holds;
  j["holds_projection"] = r.holds_projection;
  j["instance_seed"] = r.instance_seed;
  return j.dump();
}

}  // namespace pamlab::rearr
