#include "pamlab/oracle.hpp"

#include <unsupported/Eigen/MatrixFunctions>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "pamlab/stats.hpp"
#include "pamlab/walk.hpp"

namespace pamlab::oracle {

namespace {

constexpr double kHuge = 1e100;
constexpr double kTiny = 1e-100;

void renormalise(Eigen::VectorXd& v, double& log_scale) {
  const double m = v.cwiseAbs().maxCoeff();
  if (m > kHuge || (m > 0.0 && m < kTiny)) {
    v /= m;
    log_scale += std::log(m);
  }
}

OperatorBoundary operator_boundary(const BoxDomain& box) {
  return box.boundary() == Boundary::torus ? OperatorBoundary::torus : OperatorBoundary::dirichlet;
}

void check_budget(const BoxDomain& box, const PropagatorOptions& opt) {
  if (box.size() > opt.max_sites)
    throw ResourceError("oracle box has " + std::to_string(box.size()) +
                        " sites, above the budget of " + std::to_string(opt.max_sites));
}

void check_kappa(double kappa) {
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw ParameterError("kappa must be >= 0");
}

}  // namespace

void PotentialSchedule::validate(std::size_t sites) const {
  if (breaks.size() < 2 || breaks.size() != values.size() + 1)
    throw ContractError("schedule needs M+1 breakpoints for M intervals");
  if (breaks.front() != 0.0) throw ContractError("schedule must start at time 0");
  for (std::size_t k = 1; k < breaks.size(); ++k)
    if (!(breaks[k] > breaks[k - 1])) throw ContractError("schedule breakpoints must increase");
  for (const auto& v : values) {
    if (v.size() != sites) throw ContractError("schedule values do not match the box");
    for (double x : v)
      if (!std::isfinite(x)) throw ContractError("schedule values must be finite");
  }
}

PotentialSchedule PotentialSchedule::reversed() const {
  PotentialSchedule r;
  const double T = horizon();
  r.breaks.reserve(breaks.size());
  for (std::size_t k = breaks.size(); k-- > 0;) r.breaks.push_back(T - breaks[k]);
  r.breaks.front() = 0.0;
  r.breaks.back() = T;
  r.values.assign(values.rbegin(), values.rend());
  return r;
}

PotentialSchedule PotentialSchedule::truncated(double t) const {
  if (!(t > 0.0) || t > horizon()) throw RangeError("truncation time outside (0, horizon]");
  PotentialSchedule r;
  r.breaks.push_back(0.0);
  for (std::size_t k = 0; k < values.size() && breaks[k] < t; ++k) {
    r.values.push_back(values[k]);
    r.breaks.push_back(std::min(breaks[k + 1], t));
  }
  return r;
}

PotentialSchedule PotentialSchedule::constant(double t, std::vector<double> v) {
  PotentialSchedule s;
  s.breaks = {0.0, t};
  s.values.push_back(std::move(v));
  return s;
}

PotentialSchedule schedule_from_trajectory(const env::EnvTrajectory& traj, const BoxDomain& box,
                                           double t0, double t1) {
  if (!(t0 >= 0.0 && t1 <= traj.horizon() && t1 > t0))
    throw RangeError("schedule window outside the trajectory horizon");
  if (box.dim() != traj.dim()) throw ContractError("box and trajectory dimensions differ");
  std::vector<std::size_t> site(box.size());
  for (std::size_t i = 0; i < box.size(); ++i) site[i] = traj.site_index(box.coord(i));

  std::vector<double> times{t0};
  for (std::size_t s : site)
    for (const auto& e : traj.events(s))
      if (e.time > t0 && e.time < t1) times.push_back(e.time);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  PotentialSchedule out;
  for (double tau : times) {
    out.breaks.push_back(tau - t0);
    std::vector<double> v(box.size());
    for (std::size_t i = 0; i < box.size(); ++i) v[i] = traj.value(site[i], tau);
    out.values.push_back(std::move(v));
  }
  out.breaks.push_back(t1 - t0);
  out.breaks.front() = 0.0;
  return out;
}

void apply_exponential(const LatticeOperator& h, double tau, Eigen::VectorXd& v,
                       double& log_scale, const PropagatorOptions& opt) {
  if (!(tau >= 0.0)) throw ContractError("negative propagation time");
  if (tau == 0.0) return;
  const bool dense = opt.method == Method::dense ||
                     (opt.method == Method::automatic && h.size() <= opt.dense_limit);
  if (dense) {
    const Eigen::MatrixXd e = (h.dense() * tau).exp();
    if (!e.allFinite()) throw NumericError("dense matrix exponential overflowed");
    v = e * v;
    renormalise(v, log_scale);
    return;
  }

  // P = H + c I has non-negative entries, so the Taylor terms of exp(h P) v
  // never cancel for v >= 0.
  const double c = std::max(0.0, -h.min_diagonal());
  const double norm = h.norm_inf() + c;
  const double theta = norm * tau;
  const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(theta / 8.0)));
  const double dt = tau / static_cast<double>(steps);
  const double local_theta = norm * dt;
  const double stop = std::min(opt.tolerance, 1e-3) * 1e-7;
  Eigen::VectorXd term(v.size());
  Eigen::VectorXd next(v.size());
  for (std::size_t s = 0; s < steps; ++s) {
    term = v;
    Eigen::VectorXd sum = v;
    bool converged = false;
    for (int k = 1; k <= 400; ++k) {
      next.noalias() = h.matrix() * term;
      next += c * term;
      term = next * (dt / k);
      sum += term;
      const double tn = term.cwiseAbs().maxCoeff();
      const double sn = sum.cwiseAbs().maxCoeff();
      if (k > local_theta && tn <= stop * sn) {
        converged = true;
        break;
      }
    }
    if (!converged) throw NumericError("Taylor propagator did not converge");
    v = sum;
    log_scale -= c * dt;
    renormalise(v, log_scale);
  }
}

std::vector<double> solve_pam(const PotentialSchedule& schedule, double kappa,
                              const BoxDomain& box, const std::vector<double>& u0, double t,
                              const PropagatorOptions& opt) {
  check_kappa(kappa);
  check_budget(box, opt);
  schedule.validate(box.size());
  if (u0.size() != box.size()) throw ContractError("initial condition does not match the box");
  bool positive = false;
  for (double x : u0) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw ContractError("initial condition must be >= 0 and finite");
    positive = positive || x > 0.0;
  }
  if (!positive) throw ContractError("initial condition is identically zero");
  const PotentialSchedule sched = schedule.truncated(t);

  Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(u0.data(), static_cast<Eigen::Index>(u0.size()));
  double log_scale = 0.0;
  for (std::size_t k = 0; k < sched.intervals(); ++k) {
    const LatticeOperator h(box.dim(), box.half_width(), operator_boundary(box), kappa, sched.values[k]);
    apply_exponential(h, sched.breaks[k + 1] - sched.breaks[k], v, log_scale, opt);
  }
  std::vector<double> u(box.size());
  const double scale = std::exp(log_scale);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = v[static_cast<Eigen::Index>(i)] * scale;
  return u;
}

double fk_log_expectation(const PotentialSchedule& schedule, double kappa, const BoxDomain& box,
                          const Coord& start, double t, const std::vector<double>& f,
                          const PropagatorOptions& opt) {
  check_kappa(kappa);
  check_budget(box, opt);
  schedule.validate(box.size());
  if (!box.contains(start)) throw RangeError("start site outside the box");
  if (!f.empty() && f.size() != box.size()) throw ContractError("terminal weights do not match the box");
  const PotentialSchedule sched = schedule.truncated(t);

  Eigen::VectorXd v = f.empty()
                          ? Eigen::VectorXd::Ones(static_cast<Eigen::Index>(box.size()))
                          : Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(
                                f.data(), static_cast<Eigen::Index>(f.size())));
  double log_scale = 0.0;
  for (std::size_t k = sched.intervals(); k-- > 0;) {
    const LatticeOperator h(box.dim(), box.half_width(), operator_boundary(box), kappa, sched.values[k]);
    apply_exponential(h, sched.breaks[k + 1] - sched.breaks[k], v, log_scale, opt);
  }
  const double at = v[static_cast<Eigen::Index>(box.index(start))];
  if (!(at > 0.0)) return -std::numeric_limits<double>::infinity();
  return log_scale + std::log(at);
}

double fk_expectation(const PotentialSchedule& schedule, double kappa, const BoxDomain& box,
                      const Coord& start, double t, const std::vector<double>& f,
                      const PropagatorOptions& opt) {
  return std::exp(fk_log_expectation(schedule, kappa, box, start, t, f, opt));
}

std::int64_t escape_half_width(double kappa, double t, int dim, double log_weight, double budget) {
  const double lambda = 2.0 * kappa * t;
  if (lambda == 0.0) return 0;
  const double target = std::log(budget) - std::log(static_cast<double>(dim)) - log_weight;
  std::int64_t L = 0;
  while (stats::log_poisson_tail(lambda, static_cast<long>(L + 1)) > target) ++L;
  return L;
}

void write_field_csv(std::ostream& out, const BoxDomain& box, const std::vector<double>& u) {
  if (u.size() != box.size()) throw ContractError("field does not match the box");
  std::ostringstream line;
  line << std::setprecision(17);
  for (std::size_t i = 0; i < u.size(); ++i) {
    line.str("");
    line << to_string(box.coord(i), box.dim()) << ' ' << u[i] << '\n';
    out << line.str();
  }
}

Comparison mc_vs_oracle_report(const env::EnvTrajectory& traj, double kappa, double t,
                               std::size_t replicas, std::uint64_t seed, unsigned threads,
                               const PropagatorOptions& opt) {
  const BoxDomain& torus = traj.torus();
  const PotentialSchedule forward = schedule_from_trajectory(traj, torus, 0.0, t);
  std::vector<double> delta(torus.size(), 0.0);
  delta[torus.index(Coord{})] = 1.0;

  Comparison c{};
  c.kappa = kappa;
  c.t = t;
  c.replicas = replicas;
  c.seed = seed;
  c.oracle_u = fk_expectation(forward.reversed(), kappa, torus, Coord{}, t, delta, opt);

  walk::EstimateOptions mc;
  mc.initial = walk::InitialCondition::delta0;
  mc.boundary = walk::BoundaryMode::periodic;
  mc.bootstrap = 0;
  mc.threads = threads;
  const auto est = walk::fk_estimate_u(traj, kappa, t, replicas, seed, mc);
  c.hits = est.hits;
  c.mc_u = est.degenerate ? 0.0 : std::exp(est.log_u);
  c.mc_stderr = est.degenerate || !std::isfinite(est.log_stderr) ? 0.0 : c.mc_u * est.log_stderr;
  const double diff = c.mc_u - c.oracle_u;
  if (c.mc_stderr > 0.0) {
    c.z = diff / c.mc_stderr;
  } else if (std::abs(diff) <= 1e-12 * std::abs(c.oracle_u)) {
    c.z = 0.0;
  } else {
    c.z = std::copysign(std::numeric_limits<double>::infinity(), diff);
  }
  return c;
}

std::string to_json(const Comparison& c) {
  nlohmann::ordered_json j;
  j["kappa"] = c.kappa;
  j["t"] = c.t;
  j["replicas"] = c.replicas;
  j["seed"] = c.seed;
  j["hits"] = c.hits;
  j["mc_u"] = c.mc_u;
  j["mc_stderr"] = c.mc_stderr;
  j["oracle_u"] = c.oracle_u;
  j["z"] = c.z;
  return j.dump();
}

}  // namespace pamlab::oracle
