#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "pamlab/multiscale.hpp"

using namespace pamlab;
using namespace pamlab::ms;

namespace {

BlockSpec spec_1d(double A, double delta) {
  BlockSpec s;
  s.A = A;
  s.delta = delta;
  return s;
}

env::EnvTrajectory frozen(std::int64_t radius, double horizon, std::map<Coord, double> v, int dim = 1) {
  return env::sample_env(env::EnvConfig::frozen_field(dim, radius, horizon, std::move(v)));
}

// Brute force over a fine s-grid; only for fixtures with a known answer.
double brute_worst(const env::EnvTrajectory& traj, const BlockSpec& spec, const BlockId& id) {
  const auto blk = block_bounds(spec, id);
  const auto q = static_cast<std::int64_t>(std::ceil(spec.space_scale(id.R)));
  double worst = -1e300;
  for (double s = std::max(0.0, blk.t0); s < blk.t1 - 1.0 / spec.m; s += 1e-3) {
    for (std::int64_t y = blk.lo[0]; y + q <= blk.hi[0]; ++y) {
      double sum = 0.0;
      for (std::int64_t z = y; z < y + q; ++z) {
        const auto ev = traj.events(Coord{{z}});
        double m = traj.value(Coord{{z}}, s);
        for (const auto& e : ev)
          if (e.time > s && e.time < s + 1.0 / spec.m) m = std::max(m, e.value);
        sum += m;
      }
      worst = std::max(worst, sum / static_cast<double>(q));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("block bounds") {
  BlockSpec s = spec_1d(2.0, 0.0);
  BlockId id;
  id.R = 1;
  auto b = block_bounds(s, id);
  CHECK(b.lo[0] == -2);
  CHECK(b.hi[0] == 2);
  CHECK(b.t0 == 0.0);
  CHECK(b.t1 == 2.0);
  s.b = 1;
  s.c = 1;
  b = block_bounds(s, id);
  CHECK(b.lo[0] == -4);
  CHECK(b.hi[0] == 4);
  CHECK(b.t0 == -2.0);
  CHECK(b.t1 == 2.0);
  const auto q = q_box(s, 1, Coord{});
  CHECK(q.lo[0] == 0);
  CHECK(q.hi[0] == 2);
  CHECK(q.site_count(1) == 2);

  s.A = 0.5;
  CHECK_THROWS_AS(s.validate(), ParameterError);
  s.A = 2.0;
  s.alpha = 0.5;
  CHECK_THROWS_AS(s.validate(), ParameterError);
}

TEST_CASE("tiling blocks partition the window and nest") {
  for (int d : {1, 2}) {
    BlockSpec s = spec_1d(3.0, 0.0);
    s.dim = d;
    s.alpha = 1.5;
    for (int R : {1, 2}) {
      const double T = s.time_scale(R);
      for (std::int64_t a = -30; a <= 30; a += 3) {
        for (std::int64_t c = -7; c <= 7; c += 7) {
          Coord z{{a, c}};
          for (double t : {0.0, 0.5 * T, 3.2 * T}) {
            const BlockId id = tiling_block_at(s, R, z, t);
            // the containing block holds the point and no neighbour does
            CHECK(block_bounds(s, id, false).contains(z, t, d));
            for (int j = 0; j < d; ++j) {
              for (int step : {-2, 2}) {
                BlockId n = id;
                n.x[j] += step;
                CHECK_FALSE(block_bounds(s, n, false).contains(z, t, d));
              }
            }
            BlockId later = id;
            later.k += 1;
            CHECK_FALSE(block_bounds(s, later, false).contains(z, t, d));
            // nesting
            const BlockId p = tiling_parent(s, id);
            CHECK(block_bounds(s, p, false).contains(z, t, d));
            const auto kids = tiling_children(s, p);
            CHECK(kids.size() == static_cast<std::size_t>(std::pow(3, d + 1)));
            std::size_t holding = 0;
            for (const auto& k : kids) holding += block_bounds(s, k, false).contains(z, t, d) ? 1 : 0;
            CHECK(holding == 1);
            CHECK(std::find(kids.begin(), kids.end(), id) != kids.end());
          }
        }
      }
    }
  }
  BlockSpec frac = spec_1d(2.5, 0.0);
  CHECK_THROWS_AS(tiling_parent(frac, BlockId{}), ParameterError);
}

TEST_CASE("classification examples") {
  BlockSpec s = spec_1d(2.0, 0.1);
  BlockId id;
  id.x[0] = 1;
  const auto zero = frozen(6, 4.0, {});
  CHECK(classify_block(zero, s, id).good);

  std::map<Coord, double> lifted;
  for (std::int64_t z = -6; z <= 6; ++z) lifted[Coord{{z}}] = 1.1;
  CHECK_FALSE(classify_block(frozen(6, 4.0, lifted), s, id).good);

  // spike 10 inside a Q-box of 4 sites: average 2.5 > 1
  BlockSpec s4 = spec_1d(4.0, 1.0);
  const auto spike = frozen(10, 8.0, {{Coord{{3}}, 10.0}});
  const auto c = classify_block(spike, s4, id);
  CHECK_FALSE(c.good);
  CHECK(c.worst == doctest::Approx(2.5));
  s4.delta = 2.5;
  CHECK(classify_block(spike, s4, id).good);
}

TEST_CASE("classification range errors") {
  BlockSpec s = spec_1d(2.0, 1.0);
  s.c = 1;
  BlockId id;
  id.x[0] = 1;
  const auto zero = frozen(6, 4.0, {});
  CHECK_THROWS_AS(classify_block(zero, s, id), RangeError);
  ClassifyOptions clip;
  clip.clip_at_zero = true;
  CHECK(classify_block(zero, s, id, clip).good);
  id.k = 5;
  CHECK_THROWS_AS(classify_block(zero, s, id), RangeError);
  BlockSpec wide = spec_1d(8.0, 1.0);
  CHECK_THROWS_AS(classify_block(zero, wide, BlockId{}), RangeError);
}

TEST_CASE("exact evaluation set matches a fine grid") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto traj = env::sample_env(env::EnvConfig::two_state_spin(1, 10, 9.0, 1.5, seed));
    BlockSpec s = spec_1d(3.0, 0.0);
    s.m = 2.0;
    s.b = 1;
    BlockId id;
    id.x[0] = 1;
    id.k = 1;
    const auto c = classify_block(traj, s, id, ClassifyOptions{Field::raw, true, false});
    s.delta = 1e9;
    const auto full = classify_block(traj, s, id);
    CHECK(full.good);
    CHECK(full.worst >= brute_worst(traj, s, id) - 1e-12);
    // worst is attained, so the grid gets within one step of it
    CHECK(full.worst == doctest::Approx(brute_worst(traj, s, id)));
    CHECK(c.worst <= full.worst);
  }
}

TEST_CASE("badness is monotone in delta") {
  const auto traj = env::sample_env(env::EnvConfig::two_state_spin(2, 6, 4.0, 1.0, 3));
  BlockSpec s;
  s.A = 2.0;
  s.dim = 2;
  BlockId id;
  id.x = Coord{{1, -1}};
  id.k = 1;
  bool was_good = false;
  for (double delta = 0.0; delta <= 1.5; delta += 0.0625) {
    s.delta = delta;
    const bool good = classify_block(traj, s, id).good;
    if (was_good) CHECK(good);
    was_good = good;
  }
  CHECK(was_good);
}

TEST_CASE("truncated field") {
  BlockSpec s = spec_1d(2.0, 1.0);
  const auto zero = truncate_env(frozen(6, 4.0, {}), s);
  for (std::size_t i = 0; i < zero.site_count(); ++i)
    for (const auto& e : zero.events(i)) CHECK(e.value == 0.0);

  // value delta A^d = 2 keeps the block good (average 1) but is cut by "<"
  const auto tie = truncate_env(frozen(6, 4.0, {{Coord{{1}}, 2.0}, {Coord{{-3}}, 1.5}}), s);
  CHECK(tie.value(Coord{{1}}, 0.5) == 0.0);
  CHECK(tie.value(Coord{{-3}}, 0.5) == 3.0);
  CHECK(tie.horizon() == 4.0);

  // v < delta A^d inside a bad block
  const auto bad = truncate_env(frozen(6, 4.0, {{Coord{{1}}, 1.5}, {Coord{{0}}, 1.5}}), s);
  CHECK(bad.value(Coord{{1}}, 0.5) == 0.0);
  CHECK(bad.value(Coord{{0}}, 0.5) == 0.0);

  for (std::uint64_t seed : {1u, 2u}) {
    const auto traj = env::sample_env(env::EnvConfig::two_state_spin(1, 12, 7.0, 1.0, seed));
    BlockSpec t = spec_1d(2.0, 0.6);
    t.b = 1;
    t.c = 1;
    const auto bar = truncate_env(traj, t);
    CHECK(bar.horizon() == 6.0);
    ClassifyOptions clip;
    clip.clip_at_zero = true;
    for (std::size_t i = 0; i < bar.site_count(); ++i) {
      const Coord z = bar.torus().coord(i);
      for (double r = 0.0; r < 6.0; r += 0.01) {
        const double v = bar.value(i, r);
        CHECK(v < 2.0 * t.delta * 2.0);
        if (v != 0.0) CHECK(classify_block(traj, t, tiling_block_at(t, 1, z, r), clip).good);
      }
    }
  }
}

TEST_CASE("block entries agree with crossing counts") {
  BlockSpec s = spec_1d(3.0, 0.0);
  s.alpha = 1.5;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto p = walk::sample_walk(2.0, 2, 20.0, seed);
    s.dim = 2;
    for (int R : {1, 2}) {
      const auto e = block_entries(p, s, R);
      const walk::CrossingGrid g{2.0 * s.space_scale(R), s.time_scale(R), Coord{}};
      CHECK(e.size() == walk::count_block_crossings(p, g).total);
      for (const auto& id : e) CHECK(id.R == R);
    }
  }
}

TEST_CASE("census examples") {
  BlockSpec s = spec_1d(2.0, 1.0);
  const auto still = walk::sample_walk(0.0, 1, 4.0, 1);
  const auto moving = walk::sample_walk(1.0, 1, 4.0, 2);

  for (const auto& row : block_census(frozen(8, 4.0, {}), moving, s, 1)) {
    CHECK(row.xi_count == 0);
    CHECK(row.psi_count == 0);
  }

  std::map<Coord, double> huge;
  for (std::int64_t z = -8; z <= 8; ++z) huge[Coord{{z}}] = 1e6;
  const auto rows = block_census(frozen(8, 4.0, huge), moving, s, 1);
  CHECK(rows[0].xi_count == block_entries(moving, s, 1).size());
  CHECK(rows[0].psi_count == 0);

  // bad 1-block [0,4) inside the good 2-block [0,8): spike average 1.5 vs 0.75
  const auto one = frozen(8, 4.0, {{Coord{{1}}, 3.0}});
  const auto r = block_census(one, still, s, 1);
  CHECK(r[0].xi_count == 2);
  CHECK(r[0].psi_count == 1);
  CHECK(r[0].bad_blocks.size() == 2);
  BlockId parent;
  parent.R = 2;
  parent.x[0] = 1;
  CHECK(mixing_event(one, s, parent));
  CHECK(to_json(r[0], 1).find("\"psi_count\":1") != std::string::npos);
}

TEST_CASE("mixing probe") {
  BlockSpec s = spec_1d(2.0, 0.5);
  auto zero = env::EnvConfig::frozen_field(1, 4, 1.0, {});
  const auto z = mixing_probe(zero, s, 1, 100);
  CHECK(z.hits == 0);
  CHECK(z.verdict == Verdict::consistent);

  std::map<Coord, double> huge;
  for (std::int64_t x = -12; x <= 12; ++x) huge[Coord{{x}}] = 1e6;
  const auto h = mixing_probe(env::EnvConfig::frozen_field(1, 12, 1.0, huge), s, 1, 100);
  CHECK(h.hits == 0);
  CHECK(h.verdict == Verdict::consistent);
  CHECK(h.bound == doctest::Approx(std::pow(2.0, -24.0)));

  CHECK_THROWS_AS(mixing_probe(zero, s, 1, 50), ParameterError);
}

TEST_CASE("schedule") {
  CHECK(ScheduleParams::A_of(1.0 / 14.0, 2.0, 1) == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
  const auto rep = schedule_report(1.0 / 14.0, 2.0, 3.0, 1, 6);
  CHECK(rep.certificate);
  CHECK_FALSE(rep.A_valid);
  CHECK(rep.ratio == doctest::Approx(std::exp(-1.0)));
  for (const auto& row : rep.rows) {
    CHECK(row.delta == doctest::Approx(3.0 * std::exp(-8.0 / 3.0) * std::exp(-4.0 * row.R)).epsilon(1e-13));
    CHECK(row.log10_rho == doctest::Approx(-24.0 * row.R / std::log(10.0)));
  }
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    CHECK(rep.rows[i].delta < rep.rows[i - 1].delta);
    CHECK(rep.rows[i].partial_sum > rep.rows[i - 1].partial_sum);
  }
  CHECK_THROWS_AS(ScheduleParams(1.0 / 14.0, 2.0, 3.0, 1), ParameterError);
  CHECK_THROWS_AS(schedule_report(0.0, 2.0, 1.0, 1, 3), ParameterError);
  CHECK_THROWS_AS(schedule_report(0.1, 1.0, 1.0, 1, 3), ParameterError);

  // small eps gives A > 3; the tail bound dominates the remaining sum
  for (int d : {1, 2, 3}) {
    const ScheduleParams p(0.01, 2.0, 1.0, d);
    CHECK(p.A() > 3.0);
    CHECK(p.ratio() < 1.0);
    const auto r = schedule_report(0.01, 2.0, 1.0, d, 5);
    double tail = 0.0;
    for (int R = 6; R < 400; ++R) tail += p.sum_term(R);
    CHECK(tail <= r.tail_bound * (1.0 + 1e-12));
    for (int R = 1; R <= 5; ++R) {
      CHECK(p.delta(R + 1) < p.delta(R));
      CHECK(p.log_L(R) == doctest::Approx(-p.log_rho(R) / (d + 1)));
    }
  }
}

TEST_CASE("enlarged-block crossing bound") {
  BlockSpec s = spec_1d(4.0, 0.0);
  const auto still = walk::sample_walk(0.0, 1, 64.0, 0);
  const auto cb = crossing_bound_check(still, s, 2, 1);
  CHECK(cb.k_star == 16);
  CHECK(cb.crossings == 4);
  CHECK(cb.bound == doctest::Approx(12.0));
  CHECK(cb.holds);
  std::size_t held = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto p = walk::sample_walk(1.0, 1, 64.0, seed);
    held += crossing_bound_check(p, s, 2, 1).holds ? 1 : 0;
  }
  CHECK(held == 1000);
}
