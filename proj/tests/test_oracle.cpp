#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "pamlab/oracle.hpp"
#include "pamlab/walk.hpp"

using namespace pamlab;
using namespace pamlab::oracle;

namespace {

double bessel_return_probability(double kappa, double t) {
  const double x = kappa * t;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 200; ++k) {
    term *= x / k;
    sum += term * term;
  }
  return std::exp(-2.0 * x) * sum;
}

std::vector<double> delta_at(const BoxDomain& box, const Coord& x) {
  std::vector<double> v(box.size(), 0.0);
  v[box.index(x)] = 1.0;
  return v;
}

std::vector<double> random_potential(const BoxDomain& box, Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(box.size());
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_CASE("operator assembly") {
  const LatticeOperator neu(1, 0, OperatorBoundary::neumann, 1.0);
  CHECK(neu.dense()(0, 0) == 0.0);
  const LatticeOperator dir(1, 0, OperatorBoundary::dirichlet, 1.0);
  CHECK(dir.dense()(0, 0) == -2.0);
  const LatticeOperator tor(2, 2, OperatorBoundary::torus, 0.5);
  const Eigen::MatrixXd m = tor.dense();
  CHECK((m - m.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(m.rowwise().sum().cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("constants are preserved and constant potentials scale") {
  const BoxDomain torus(1, 5, Boundary::torus);
  const std::vector<double> ones(torus.size(), 1.0);
  const auto zero = PotentialSchedule::constant(2.0, std::vector<double>(torus.size(), 0.0));
  for (double u : solve_pam(zero, 1.3, torus, ones, 2.0)) CHECK(u == doctest::Approx(1.0).epsilon(1e-13));
  const auto c = PotentialSchedule::constant(2.0, std::vector<double>(torus.size(), 0.4));
  for (double u : solve_pam(c, 1.3, torus, ones, 2.0))
    CHECK(u == doctest::Approx(std::exp(0.8)).epsilon(1e-13));
  CHECK(fk_expectation(zero, 0.7, torus, Coord{}, 2.0) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(fk_expectation(c, 0.7, torus, Coord{}, 1.5) == doctest::Approx(std::exp(0.6)).epsilon(1e-13));
}

TEST_CASE("return probability matches the Bessel series") {
  const BoxDomain torus(1, 10, Boundary::torus);
  const auto zero = PotentialSchedule::constant(1.0, std::vector<double>(torus.size(), 0.0));
  const double exact = bessel_return_probability(1.0, 1.0);
  for (Method m : {Method::dense, Method::action}) {
    PropagatorOptions opt;
    opt.method = m;
    const auto u = solve_pam(zero, 1.0, torus, delta_at(torus, Coord{}), 1.0, opt);
    CHECK(std::abs(u[torus.index(Coord{})] - exact) < 1e-6);
    CHECK(std::abs(u[torus.index(Coord{})] - exact) < 1e-13);
  }
}

TEST_CASE("dense and action propagators agree") {
  Rng rng = make_rng(1, 0);
  for (int d : {1, 2}) {
    const BoxDomain box(d, d == 1 ? 8 : 3, Boundary::dirichlet);
    PotentialSchedule s;
    s.breaks = {0.0, 0.3, 1.1, 2.0};
    for (int k = 0; k < 3; ++k) s.values.push_back(random_potential(box, rng, -1.0, 2.0));
    PropagatorOptions dense;
    dense.method = Method::dense;
    PropagatorOptions action;
    action.method = Method::action;
    const auto a = solve_pam(s, 1.7, box, delta_at(box, Coord{}), 2.0, dense);
    const auto b = solve_pam(s, 1.7, box, delta_at(box, Coord{}), 2.0, action);
    for (std::size_t i = 0; i < a.size(); ++i)
      CHECK(b[i] == doctest::Approx(a[i]).epsilon(1e-10).scale(1e-300));
  }
}

TEST_CASE("semigroup, positivity, duality") {
  Rng rng = make_rng(2, 0);
  const BoxDomain box(1, 12, Boundary::torus);
  const auto v = random_potential(box, rng, -1.0, 1.0);
  const auto u0 = delta_at(box, Coord::on_axis(0, 3));
  PropagatorOptions action;
  action.method = Method::action;
  const auto whole = solve_pam(PotentialSchedule::constant(1.7, v), 2.0, box, u0, 1.7, action);
  PotentialSchedule split;
  split.breaks = {0.0, 0.6, 1.7};
  split.values = {v, v};
  const auto parts = solve_pam(split, 2.0, box, u0, 1.7, action);
  for (std::size_t i = 0; i < whole.size(); ++i) {
    CHECK(std::abs(whole[i] - parts[i]) <= 1e-9 * std::max(1.0, whole[i]));
    CHECK(whole[i] >= -1e-12);
  }

  // u(x, t) from the forward solve equals the Feynman-Kac expectation with
  // the reversed schedule.
  PotentialSchedule s;
  s.breaks = {0.0, 0.5, 0.8, 2.0};
  for (int k = 0; k < 3; ++k) s.values.push_back(random_potential(box, rng, -1.0, 1.0));
  const auto u = solve_pam(s, 0.9, box, u0, 2.0);
  const double fk = fk_expectation(s.reversed(), 0.9, box, Coord{}, 2.0, u0);
  CHECK(fk == doctest::Approx(u[box.index(Coord{})]).epsilon(1e-11));
  for (double x : u) CHECK(x >= -1e-12);
}

TEST_CASE("dirichlet is below torus for non-negative potentials") {
  Rng rng = make_rng(3, 0);
  for (int rep = 0; rep < 10; ++rep) {
    const BoxDomain dir(1, 4, Boundary::dirichlet);
    const BoxDomain tor(1, 4, Boundary::torus);
    const auto v = random_potential(dir, rng, 0.0, 2.0);
    const auto s = PotentialSchedule::constant(3.0, v);
    const double a = solve_pam(s, 1.0, dir, delta_at(dir, Coord{}), 3.0)[dir.index(Coord{})];
    const double b = solve_pam(s, 1.0, tor, delta_at(tor, Coord{}), 3.0)[tor.index(Coord{})];
    CHECK(a <= b);
  }
}

TEST_CASE("local-time exponential moment against Monte Carlo") {
  // E_0 exp{C l_t({0} x [0, t])}, d = 1, kappa = 0.5, C = 1, t = 2.
  const BoxDomain box(1, 20, Boundary::dirichlet);
  std::vector<double> v(box.size(), 0.0);
  v[box.index(Coord{})] = 1.0;
  const double exact = fk_expectation(PotentialSchedule::constant(2.0, v), 0.5, box, Coord{}, 2.0);
  // Reference from an independent dense expm on a box of half-width 40.
  CHECK(exact == doctest::Approx(3.4852680977761157).epsilon(1e-10));

  Rng rng = make_rng(77, 0);
  const std::size_t n = 1000000;
  double s = 0.0;
  double s2 = 0.0;
  walk::WalkPath p;
  for (std::size_t r = 0; r < n; ++r) {
    walk::sample_walk_into(p, 0.5, 1, 2.0, rng, Coord{}, nullptr);
    const double w = std::exp(walk::local_time_at(p, Coord{}));
    s += w;
    s2 += w * w;
  }
  const double mean = s / n;
  const double se = std::sqrt((s2 / n - mean * mean) / n);
  CHECK(std::abs(mean - exact) < 3.0 * se);
}

TEST_CASE("schedule from trajectory and reversal") {
  env::EnvConfig cfg = env::EnvConfig::frozen_field(1, 2, 3.0, {});
  cfg.kind = env::Kind::derived;
  const auto traj = env::EnvTrajectory::from_events(
      cfg, {{Coord{}, {{0.0, 1.0}, {1.0, 2.0}}}, {Coord::on_axis(0, 1), {{0.0, 0.0}, {2.5, 5.0}}}});
  const auto s = schedule_from_trajectory(traj, traj.torus(), 0.0, 3.0);
  CHECK(s.breaks == std::vector<double>{0.0, 1.0, 2.5, 3.0});
  const auto zero = traj.torus().index(Coord{});
  const auto one = traj.torus().index(Coord::on_axis(0, 1));
  CHECK(s.values[0][zero] == 1.0);
  CHECK(s.values[1][zero] == 2.0);
  CHECK(s.values[2][one] == 5.0);
  const auto r = s.reversed();
  CHECK(r.breaks == std::vector<double>{0.0, 0.5, 2.0, 3.0});
  CHECK(r.values[0][one] == 5.0);
  const auto tr = s.truncated(2.0);
  CHECK(tr.breaks == std::vector<double>{0.0, 1.0, 2.0});
}

TEST_CASE("errors") {
  const BoxDomain box(1, 3, Boundary::torus);
  const auto zero = PotentialSchedule::constant(1.0, std::vector<double>(box.size(), 0.0));
  std::vector<double> neg(box.size(), 1.0);
  neg[0] = -1.0;
  CHECK_THROWS_AS(solve_pam(zero, 1.0, box, neg, 1.0), ContractError);
  PropagatorOptions tiny;
  tiny.max_sites = 3;
  CHECK_THROWS_AS(solve_pam(zero, 1.0, box, std::vector<double>(box.size(), 1.0), 1.0, tiny),
                  ResourceError);
}

TEST_CASE("mc versus oracle") {
  auto zero_cfg = env::EnvConfig::frozen_field(1, 6, 1.0, {});
  const auto zero = env::sample_env(zero_cfg);
  const auto c = mc_vs_oracle_report(zero, 1.0, 1.0, 20000, 5);
  CHECK(std::abs(c.z) < 4.0);
  CHECK(c.oracle_u == doctest::Approx(bessel_return_probability(1.0, 1.0)).epsilon(1e-9));

  Rng rng = make_rng(8, 0);
  BoxDomain box(1, 6, Boundary::torus);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t i = 0; i < box.size(); ++i) zero_cfg.frozen[box.coord(i)] = u(rng);
  const auto rough = env::sample_env(zero_cfg);
  const auto still = mc_vs_oracle_report(rough, 0.0, 1.0, 100, 5);
  CHECK(still.z == 0.0);
  CHECK(still.mc_stderr == 0.0);

  const auto spin = env::sample_env(env::EnvConfig::two_state_spin(1, 6, 1.0, 2.0, 9));
  const auto cs = mc_vs_oracle_report(spin, 1.0, 1.0, 20000, 6);
  CHECK(std::abs(cs.z) < 4.0);
  CHECK(to_json(cs).find("\"oracle_u\"") != std::string::npos);
}
