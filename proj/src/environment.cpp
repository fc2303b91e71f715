#include "pamlab/environment.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>

#include "pamlab/rng.hpp"

namespace pamlab::env {

namespace {

std::size_t env_size_override(const char* name, std::size_t fallback) {
  if (const char* v = std::getenv(name)) {
    char* end = nullptr;
    const unsigned long long parsed = std::strtoull(v, &end, 10);
    if (end != v && *end == '\0' && parsed > 0) return static_cast<std::size_t>(parsed);
    throw ConfigError(std::string("invalid value for ") + name);
  }
  return fallback;
}

// Fenwick tree over per-site jump rates for O(log n) selection.
class RateTree {
 public:
  explicit RateTree(std::size_t n) : tree_(n + 1, 0.0), rates_(n, 0.0) {}

  void set(std::size_t i, double rate) {
    const double delta = rate - rates_[i];
    rates_[i] = rate;
    for (std::size_t k = i + 1; k < tree_.size(); k += k & (~k + 1)) tree_[k] += delta;
  }
  double rate(std::size_t i) const { return rates_[i]; }

  double total() const {
    double s = 0.0;
    for (std::size_t k = tree_.size() - 1; k > 0; k -= k & (~k + 1)) s += tree_[k];
    return s;
  }

  // Smallest i with prefix(i) > target.
  std::size_t find(double target) const {
    std::size_t pos = 0;
    std::size_t step = 1;
    while (step * 2 < tree_.size()) step *= 2;
    for (; step > 0; step /= 2) {
      const std::size_t next = pos + step;
      if (next < tree_.size() && tree_[next] <= target) {
        pos = next;
        target -= tree_[next];
      }
    }
    return std::min(pos, rates_.size() - 1);
  }

  void rebuild() {
    std::fill(tree_.begin(), tree_.end(), 0.0);
    for (std::size_t i = 0; i < rates_.size(); ++i) {
      for (std::size_t k = i + 1; k < tree_.size(); k += k & (~k + 1)) tree_[k] += rates_[i];
    }
  }

 private:
  std::vector<double> tree_;
  std::vector<double> rates_;
};

double total_exit_rate(const SpinMarkovParams& p, std::size_t i) {
  double q = 0.0;
  for (std::size_t j = 0; j < p.values.size(); ++j)
    if (j != i) q += p.rates[i][j];
  return q;
}

std::size_t sample_index(Rng& rng, std::span<const double> weights, double total) {
  std::uniform_real_distribution<double> u(0.0, total);
  double target = u(rng);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (target < weights[i]) return i;
    target -= weights[i];
  }
  // Round-off landed past the end: take the last positive weight.
  for (std::size_t i = weights.size(); i-- > 0;)
    if (weights[i] > 0.0) return i;
  return 0;
}

void check_site_budget(const EnvConfig& c, const ResourceBudget& budget) {
  const double side = static_cast<double>(2 * c.box_radius + 1);
  if (std::pow(side, c.dim) > static_cast<double>(budget.max_sites))
    throw ResourceError("torus has more sites than the budget allows (" +
                        std::to_string(budget.max_sites) + ")");
}

void check_event_budget(double expected, const ResourceBudget& budget) {
  if (expected > static_cast<double>(budget.max_events))
    throw ResourceError("expected event count " + std::to_string(expected) +
                        " exceeds the budget of " + std::to_string(budget.max_events) +
                        "; shrink the horizon or the box");
}

std::vector<std::vector<Event>> sample_spin(const EnvConfig& c, const BoxDomain& torus,
                                            const ResourceBudget& budget) {
  const auto& p = c.spin;
  const std::vector<double> pi = spin_stationary_law(p);
  double mean_rate = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) mean_rate += pi[i] * total_exit_rate(p, i);
  check_event_budget(mean_rate * c.horizon * static_cast<double>(torus.size()), budget);

  Rng rng = make_rng(c.seed, 0);
  std::vector<std::vector<Event>> events(torus.size());
  std::vector<double> row(p.values.size());
  std::size_t total = 0;
  for (std::size_t site = 0; site < torus.size(); ++site) {
    std::size_t state = sample_index(rng, pi, 1.0);
    auto& list = events[site];
    list.push_back({0.0, p.values[state]});
    double t = 0.0;
    for (;;) {
      const double q = total_exit_rate(p, state);
      t += std::exponential_distribution<double>(q)(rng);
      if (!(t <= c.horizon)) break;
      for (std::size_t j = 0; j < row.size(); ++j) row[j] = (j == state) ? 0.0 : p.rates[state][j];
      const std::size_t next = sample_index(rng, row, q);
      if (p.values[next] != p.values[state]) list.push_back({t, p.values[next]});
      state = next;
    }
    total += list.size();
    if (total > budget.max_events) throw ResourceError("event budget exhausted during sampling");
  }
  return events;
}

std::vector<std::vector<Event>> sample_zero_range(const EnvConfig& c, const BoxDomain& torus,
                                                  const ResourceBudget& budget) {
  const auto& p = c.zero_range;
  const std::vector<double> pmf = zero_range_marginal(p);
  double mean_rate = 0.0;
  for (std::size_t k = 1; k < pmf.size(); ++k)
    mean_rate += pmf[k] * std::pow(static_cast<double>(k), p.beta);
  check_event_budget(2.0 * mean_rate * c.horizon * static_cast<double>(torus.size()), budget);

  Rng rng = make_rng(c.seed, 0);
  const std::size_t n = torus.size();
  std::vector<std::int64_t> eta(n);
  std::vector<std::vector<Event>> events(n);
  RateTree rates(n);
  auto g = [&](std::int64_t k) { return k > 0 ? std::pow(static_cast<double>(k), p.beta) : 0.0; };
  for (std::size_t site = 0; site < n; ++site) {
    eta[site] = static_cast<std::int64_t>(sample_index(rng, pmf, 1.0));
    events[site].push_back({0.0, static_cast<double>(eta[site])});
    rates.set(site, g(eta[site]));
  }

  std::vector<std::size_t> nbrs;
  std::uniform_int_distribution<int> dir(0, 2 * c.dim - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t total = n;
  std::size_t since_rebuild = 0;
  double t = 0.0;
  for (;;) {
    const double rate = rates.total();
    if (rate <= 0.0) break;
    t += std::exponential_distribution<double>(rate)(rng);
    if (!(t <= c.horizon)) break;
    std::size_t from = rates.find(unit(rng) * rate);
    while (rates.rate(from) <= 0.0) from = rates.find(unit(rng) * rate);
    torus.neighbours(from, nbrs);
    const std::size_t to = nbrs[static_cast<std::size_t>(dir(rng))];
    --eta[from];
    ++eta[to];
    rates.set(from, g(eta[from]));
    rates.set(to, g(eta[to]));
    events[from].push_back({t, static_cast<double>(eta[from])});
    events[to].push_back({t, static_cast<double>(eta[to])});
    total += 2;
    if (total > budget.max_events) throw ResourceError("event budget exhausted during sampling");
    if (++since_rebuild == 1u << 16) {
      rates.rebuild();
      since_rebuild = 0;
    }
  }
  return events;
}

std::vector<std::vector<Event>> sample_random_walks(const EnvConfig& c, const BoxDomain& torus,
                                                    const ResourceBudget& budget) {
  const auto& p = c.walks;
  check_event_budget(2.0 * 2.0 * c.dim * p.rho * c.horizon * static_cast<double>(torus.size()),
                     budget);
  Rng rng = make_rng(c.seed, 0);
  const std::size_t n = torus.size();
  std::vector<std::int64_t> count(n);
  std::vector<std::size_t> position;
  std::vector<std::vector<Event>> events(n);
  std::poisson_distribution<std::int64_t> occupation(p.rho);
  auto xi = [&](std::int64_t k) { return p.gamma * static_cast<double>(k) - p.shift; };
  for (std::size_t site = 0; site < n; ++site) {
    count[site] = occupation(rng);
    for (std::int64_t k = 0; k < count[site]; ++k) position.push_back(site);
    events[site].push_back({0.0, xi(count[site])});
  }
  if (position.empty()) return events;

  const double rate = 2.0 * c.dim * static_cast<double>(position.size());
  std::uniform_int_distribution<std::size_t> pick(0, position.size() - 1);
  std::uniform_int_distribution<int> dir(0, 2 * c.dim - 1);
  std::exponential_distribution<double> wait(rate);
  std::vector<std::size_t> nbrs;
  std::size_t total = n;
  double t = 0.0;
  for (;;) {
    t += wait(rng);
    if (!(t <= c.horizon)) break;
    const std::size_t k = pick(rng);
    const std::size_t from = position[k];
    torus.neighbours(from, nbrs);
    const std::size_t to = nbrs[static_cast<std::size_t>(dir(rng))];
    position[k] = to;
    --count[from];
    ++count[to];
    events[from].push_back({t, xi(count[from])});
    events[to].push_back({t, xi(count[to])});
    total += 2;
    if (total > budget.max_events) throw ResourceError("event budget exhausted during sampling");
  }
  return events;
}

std::vector<std::vector<Event>> frozen_events(const EnvConfig& c, const BoxDomain& torus) {
  std::vector<std::vector<Event>> events(torus.size(), std::vector<Event>{{0.0, 0.0}});
  for (const auto& [x, v] : c.frozen) events[torus.index(torus.wrap(x))][0].value = v;
  return events;
}

}  // namespace

std::string to_string(Kind kind) {
  switch (kind) {
    case Kind::spin_markov: return "spin-markov";
    case Kind::zero_range: return "zero-range";
    case Kind::random_walks: return "random-walks";
    case Kind::frozen: return "frozen";
    case Kind::derived: return "derived";
  }
  return "unknown";
}

Kind kind_from_string(const std::string& name) {
  for (Kind k : {Kind::spin_markov, Kind::zero_range, Kind::random_walks, Kind::frozen,
                 Kind::derived})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown environment kind '" + name + "'");
}

void EnvConfig::validate() const {
  if (dim < 1 || dim > kMaxDim) throw ParameterError("environment dimension must lie in [1, 4]");
  if (box_radius < 1) throw ParameterError("box radius L must be >= 1");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ParameterError("horizon T must be > 0");
  switch (kind) {
    case Kind::spin_markov: {
      const std::size_t k = spin.values.size();
      if (k < 2) throw ParameterError("spin-markov needs at least two states");
      if (spin.rates.size() != k) throw ParameterError("spin-markov rate matrix has wrong shape");
      for (std::size_t i = 0; i < k; ++i) {
        if (spin.rates[i].size() != k) throw ParameterError("spin-markov rate matrix has wrong shape");
        for (std::size_t j = 0; j < k; ++j) {
          if (i != j && !(spin.rates[i][j] > 0.0))
            throw ParameterError("spin-markov rates must be strictly positive");
        }
        if (!std::isfinite(spin.values[i])) throw ParameterError("spin-markov values must be finite");
      }
      break;
    }
    case Kind::zero_range:
      if (!(zero_range.rho > 0.0)) throw ParameterError("zero-range density rho must be > 0");
      if (!(zero_range.beta > 0.0 && zero_range.beta <= 1.0))
        throw ParameterError("zero-range exponent beta must lie in (0, 1]");
      break;
    case Kind::random_walks:
      if (!(walks.rho > 0.0)) throw ParameterError("random-walks density rho must be > 0");
      if (!(walks.gamma > 0.0)) throw ParameterError("random-walks multiplier gamma must be > 0");
      if (!(walks.shift >= 0.0)) throw ParameterError("random-walks shift must be >= 0");
      break;
    case Kind::frozen:
      for (const auto& [x, v] : frozen)
        if (!std::isfinite(v)) throw ParameterError("frozen values must be finite");
      break;
    case Kind::derived:
      break;
  }
}

EnvConfig EnvConfig::two_state_spin(int dim, std::int64_t box_radius, double horizon,
                                    double flip_rate, std::uint64_t seed) {
  EnvConfig c;
  c.kind = Kind::spin_markov;
  c.dim = dim;
  c.box_radius = box_radius;
  c.horizon = horizon;
  c.spin.values = {-1.0, 1.0};
  c.spin.rates = {{0.0, flip_rate}, {flip_rate, 0.0}};
  c.seed = seed;
  return c;
}

EnvConfig EnvConfig::frozen_field(int dim, std::int64_t box_radius, double horizon,
                                  std::map<Coord, double> values) {
  EnvConfig c;
  c.kind = Kind::frozen;
  c.dim = dim;
  c.box_radius = box_radius;
  c.horizon = horizon;
  c.frozen = std::move(values);
  return c;
}

ResourceBudget ResourceBudget::from_environment() {
  ResourceBudget b;
  b.max_events = env_size_override("PAMLAB_MAX_EVENTS", b.max_events);
  b.max_sites = env_size_override("PAMLAB_MAX_SITES", b.max_sites);
  return b;
}

EnvTrajectory::EnvTrajectory(EnvConfig config, std::vector<std::vector<Event>> events)
    : config_(std::move(config)),
      torus_(config_.dim, config_.box_radius, Boundary::torus),
      events_(std::move(events)) {
  if (events_.size() != torus_.size())
    throw ContractError("event lists do not match the torus size");
  for (const auto& list : events_) {
    if (list.empty() || list.front().time != 0.0)
      throw ContractError("every site's event list must start at t = 0");
    for (std::size_t i = 1; i < list.size(); ++i) {
      if (!(list[i].time > list[i - 1].time))
        throw ContractError("event times must be strictly increasing");
    }
    if (list.back().time > config_.horizon)
      throw ContractError("event time beyond the horizon");
  }
  empirical_mean_ = window_mean(0.0, config_.horizon);
}

EnvTrajectory EnvTrajectory::from_events(EnvConfig config,
                                         const std::map<Coord, std::vector<Event>>& events) {
  BoxDomain torus(config.dim, config.box_radius, Boundary::torus);
  std::vector<std::vector<Event>> lists(torus.size(), std::vector<Event>{{0.0, 0.0}});
  for (const auto& [x, list] : events) lists[torus.index(torus.wrap(x))] = list;
  return EnvTrajectory(std::move(config), std::move(lists));
}

std::size_t EnvTrajectory::event_count() const {
  std::size_t n = 0;
  for (const auto& l : events_) n += l.size();
  return n;
}

double EnvTrajectory::value(std::size_t site, double s) const {
  if (!(s >= 0.0 && s <= config_.horizon))
    throw RangeError("time " + std::to_string(s) + " outside [0, T]");
  const auto& list = events_[site];
  auto it = std::upper_bound(list.begin(), list.end(), s,
                             [](double t, const Event& e) { return t < e.time; });
  return std::prev(it)->value;
}

double EnvTrajectory::sup_window(std::size_t site, double s, double w) const {
  if (!(w >= 0.0)) throw RangeError("window width must be non-negative");
  if (!(s >= 0.0 && s + w <= config_.horizon))
    throw RangeError("window escapes the horizon");
  if (w == 0.0) return value(site, s);
  const auto& list = events_[site];
  auto it = std::upper_bound(list.begin(), list.end(), s,
                             [](double t, const Event& e) { return t < e.time; });
  --it;
  double m = it->value;
  const double end = s + w;
  for (++it; it != list.end() && it->time < end; ++it) m = std::max(m, it->value);
  return m;
}

double EnvTrajectory::integrate(std::size_t site, double a, double b) const {
  if (!(a >= 0.0 && b <= config_.horizon && a <= b))
    throw RangeError("integration interval outside [0, T]");
  const auto& list = events_[site];
  auto it = std::upper_bound(list.begin(), list.end(), a,
                             [](double t, const Event& e) { return t < e.time; });
  --it;
  double sum = 0.0;
  double left = a;
  for (;;) {
    auto next = std::next(it);
    const double right = (next == list.end() || next->time >= b) ? b : next->time;
    sum += it->value * (right - left);
    if (right == b) break;
    left = right;
    it = next;
  }
  return sum;
}

double EnvTrajectory::window_mean(double a, double b) const {
  if (!(b > a)) throw RangeError("empty averaging window");
  double total = 0.0;
  for (std::size_t site = 0; site < events_.size(); ++site) total += integrate(site, a, b);
  return total / ((b - a) * static_cast<double>(events_.size()));
}

EnvTrajectory sample_env(const EnvConfig& config, const ResourceBudget& budget) {
  config.validate();
  check_site_budget(config, budget);
  BoxDomain torus(config.dim, config.box_radius, Boundary::torus);
  switch (config.kind) {
    case Kind::spin_markov: return EnvTrajectory(config, sample_spin(config, torus, budget));
    case Kind::zero_range: return EnvTrajectory(config, sample_zero_range(config, torus, budget));
    case Kind::random_walks:
      return EnvTrajectory(config, sample_random_walks(config, torus, budget));
    case Kind::frozen: return EnvTrajectory(config, frozen_events(config, torus));
    case Kind::derived: break;
  }
  throw ParameterError("derived environments cannot be sampled");
}

double env_value(const EnvTrajectory& traj, const Coord& x, double s) { return traj.value(x, s); }

double sup_window(const EnvTrajectory& traj, const Coord& x, double s, double w) {
  return traj.sup_window(traj.site_index(x), s, w);
}

std::vector<double> spin_stationary_law(const SpinMarkovParams& p) {
  const auto k = static_cast<Eigen::Index>(p.values.size());
  // Rows: balance equations pi Q = 0 (transposed), last row replaced by sum = 1.
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    double out = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (i == j) continue;
      const double r = p.rates[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      m(j, i) += r;
      out += r;
    }
    m(i, i) -= out;
  }
  m.row(k - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
  rhs(k - 1) = 1.0;
  const Eigen::VectorXd pi = m.fullPivLu().solve(rhs);
  std::vector<double> out(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) {
    if (!(pi(i) >= -1e-12)) throw NumericError("spin chain stationary law is not a distribution");
    out[static_cast<std::size_t>(i)] = std::max(0.0, pi(i));
  }
  return out;
}

std::vector<double> zero_range_marginal(const ZeroRangeParams& p) {
  if (!(p.rho > 0.0) || !(p.beta > 0.0 && p.beta <= 1.0))
    throw ParameterError("zero-range marginal needs rho > 0 and beta in (0, 1]");
  // Unnormalised weights w_k = rho^k / (k!)^beta, built by the ratio
  // w_{k+1}/w_k = rho / (k+1)^beta, which decreases in k.
  std::vector<double> w{1.0};
  double partial = 1.0;
  constexpr std::size_t kMaxTerms = 10'000'000;
  for (std::size_t k = 0;; ++k) {
    const double ratio = p.rho / std::pow(static_cast<double>(k + 1), p.beta);
    const double next = w.back() * ratio;
    if (!std::isfinite(next)) throw NumericError("zero-range marginal overflows; rho too large");
    w.push_back(next);
    partial += next;
    const double r_next = p.rho / std::pow(static_cast<double>(k + 2), p.beta);
    if (r_next < 1.0) {
      const double tail = next * r_next / (1.0 - r_next);
      if (tail < 1e-12 * partial) break;
    }
    if (w.size() > kMaxTerms) throw NumericError("zero-range series did not converge");
  }
  for (double& x : w) x /= partial;
  return w;
}

double env_mean(const EnvConfig& c) {
  c.validate();
  switch (c.kind) {
    case Kind::spin_markov: {
      const auto pi = spin_stationary_law(c.spin);
      double m = 0.0;
      for (std::size_t i = 0; i < pi.size(); ++i) m += pi[i] * c.spin.values[i];
      return m;
    }
    case Kind::zero_range: {
      const auto pmf = zero_range_marginal(c.zero_range);
      double m = 0.0;
      for (std::size_t k = 0; k < pmf.size(); ++k) m += static_cast<double>(k) * pmf[k];
      return m;
    }
    case Kind::random_walks: return c.walks.gamma * c.walks.rho - c.walks.shift;
    case Kind::frozen: {
      BoxDomain torus(c.dim, c.box_radius, Boundary::torus);
      double s = 0.0;
      for (const auto& [x, v] : c.frozen) s += v;
      return s / static_cast<double>(torus.size());
    }
    case Kind::derived: break;
  }
  throw ParameterError("no analytic mean for derived environments");
}

StationarityDiagnostic stationarity_diagnostic(const EnvTrajectory& traj) {
  const double T = traj.horizon();
  const std::size_t n = traj.site_count();
  auto summarise = [&](double a, double b, double& mean, double& se) {
    double s = 0.0;
    double s2 = 0.0;
    for (std::size_t site = 0; site < n; ++site) {
      const double avg = traj.integrate(site, a, b) / (b - a);
      s += avg;
      s2 += avg * avg;
    }
    const double nn = static_cast<double>(n);
    mean = s / nn;
    const double var = n > 1 ? std::max(0.0, (s2 - nn * mean * mean) / (nn - 1.0)) : 0.0;
    se = std::sqrt(var / nn);
  };
  StationarityDiagnostic d{};
  summarise(0.0, T, d.mean_full, d.stderr_full);
  summarise(T / 2.0, T, d.mean_late, d.stderr_late);
  const double combined = std::hypot(d.stderr_full, d.stderr_late);
  const double diff = std::abs(d.mean_full - d.mean_late);
  d.consistent = combined > 0.0 ? diff < 3.0 * combined : diff == 0.0;
  return d;
}

double growth_alpha_threshold(int dim) {
  const double d = dim;
  return (2.0 * d * (2.0 * d + 1.0) + 1.0) * (d + 2.0) / d;
}

std::vector<GrowthRow> verify_growth_condition(const EnvConfig& config,
                                               std::span<const std::int64_t> radii,
                                               std::span<const double> levels,
                                               std::size_t reps,
                                               const ResourceBudget& budget) {
  if (reps < 100) throw ParameterError("growth-condition check needs at least 100 replicas");
  if (radii.empty() || levels.empty()) throw ParameterError("empty radius or level list");
  EnvConfig c = config;
  c.horizon = 1.0;
  const std::int64_t r_max = *std::max_element(radii.begin(), radii.end());
  if (radii.front() < 0 || *std::min_element(radii.begin(), radii.end()) < 0)
    throw ParameterError("radii must be non-negative");
  c.box_radius = std::max(c.box_radius, r_max);
  const double alpha = growth_alpha_threshold(c.dim);

  // hits[r][l]
  std::vector<std::vector<std::size_t>> hits(radii.size(), std::vector<std::size_t>(levels.size()));
  for (std::size_t rep = 0; rep < reps; ++rep) {
    c.seed = stream_seed(config.seed, rep);
    const EnvTrajectory traj = sample_env(c, budget);
    const BoxDomain& torus = traj.torus();
    for (std::size_t ri = 0; ri < radii.size(); ++ri) {
      const BoxDomain ball(c.dim, radii[ri], Boundary::dirichlet);
      // Sweep all events of the ball in time order; the spatial sum is
      // piecewise constant, so its sup over [0,1] is a max over event times.
      struct Change {
        double time;
        double delta;
      };
      std::vector<Change> changes;
      double sum = 0.0;
      for (std::size_t i = 0; i < ball.size(); ++i) {
        const auto list = traj.events(torus.index(ball.coord(i)));
        sum += list[0].value;
        for (std::size_t e = 1; e < list.size() && list[e].time <= 1.0; ++e)
          changes.push_back({list[e].time, list[e].value - list[e - 1].value});
      }
      std::sort(changes.begin(), changes.end(),
                [](const Change& a, const Change& b) { return a.time < b.time; });
      double best = sum;
      for (std::size_t e = 0; e < changes.size();) {
        const double t = changes[e].time;
        while (e < changes.size() && changes[e].time == t) sum += changes[e++].delta;
        best = std::max(best, sum);
      }
      const double avg = best / static_cast<double>(ball.size());
      for (std::size_t li = 0; li < levels.size(); ++li)
        if (avg >= levels[li]) ++hits[ri][li];
    }
  }

  std::vector<GrowthRow> rows;
  for (std::size_t ri = 0; ri < radii.size(); ++ri) {
    const double volume = std::pow(2.0 * static_cast<double>(radii[ri]) + 1.0, c.dim);
    for (std::size_t li = 0; li < levels.size(); ++li) {
      GrowthRow row{};
      row.radius = radii[ri];
      row.level = levels[li];
      row.reps = reps;
      row.hits = hits[ri][li];
      row.probability = static_cast<double>(row.hits) / static_cast<double>(reps);
      row.ci = stats::wilson(row.hits, reps);
      row.alpha = alpha;
      row.bound = std::pow(volume, -alpha);
      row.passes = row.ci.upper <= row.bound;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace pamlab::env
