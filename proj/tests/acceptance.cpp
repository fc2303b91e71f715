// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "pamlab/cli.hpp"
#include "pamlab/environment.hpp"
#include "pamlab/errors.hpp"
#include "pamlab/multiscale.hpp"
#include "pamlab/walk.hpp"

using namespace pamlab;
namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

// Tolerances and limits.
constexpr double kExactRel = 64.0 * 2.220446049250313e-16;  // kappa = 0 reproduction
constexpr double kLongRunGap = 0.05;                          // |lambda_hat(0) - E xi| at t = 2000
constexpr double kStderrMultiple = 3.0;
constexpr double kZMax = 3.0;
constexpr std::size_t kOracleNeeded = 19;

const fs::path kOut = fs::absolute("acceptance-out");

unsigned workers() { return std::max(1u, std::thread::hardware_concurrency()); }

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Run {
  cli::Outcome outcome;
  std::vector<Json> records;

  std::vector<Json> of(const std::string& kind) const {
    std::vector<Json> out;
    for (const auto& r : records)
      if (r.value("record", "") == kind) out.push_back(r);
    return out;
  }
};

cli::Config config(const std::string& text, const fs::path& out) {
  std::istringstream in("schema_version = 1\n" + text);
  auto cfg = cli::Config::parse(in);
  cfg.set("out", out.string());
  return cfg;
}

Run run(const std::string& sub, const cli::Config& cfg) {
  const auto g = cli::read_globals(cfg);
  Run r{cli::run_subcommand(sub, cfg, g), {}};
  for (const auto& a : r.outcome.artifacts) {
    if (a.extension() != ".jsonl") continue;
    std::ifstream in(a);
    for (std::string line; std::getline(in, line);) r.records.push_back(Json::parse(line));
  }
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::size_t count_true(const std::vector<Json>& recs, const std::string& key) {
  std::size_t n = 0;
  for (const auto& r : recs) n += r.at(key).get<bool>() ? 1 : 0;
  return n;
}

// Property tallies from rearrange-verify, keyed by family.
std::map<std::string, Json> tallies(const Run& r) {
  std::map<std::string, Json> out;
  for (const auto& t : r.of("property")) out[t.at("property").get<std::string>()] = t;
  return out;
}

// Integral of xi(0, .) over [0, t], summed from the raw event list.
double origin_integral(const env::EnvTrajectory& traj, double t) {
  const auto ev = traj.events(Coord{});
  double sum = 0.0;
  for (std::size_t i = 0; i < ev.size() && ev[i].time < t; ++i) {
    const double end = i + 1 < ev.size() ? std::min(ev[i + 1].time, t) : t;
    sum += ev[i].value * (end - ev[i].time);
  }
  return sum;
}

Verdict c1_kappa_zero() {
  const double t = 50.0;
  std::vector<env::EnvConfig> kinds;
  auto base = env::EnvConfig::two_state_spin(1, 3, t, 1.0, 101);
  kinds.push_back(base);
  base.kind = env::Kind::zero_range;
  base.seed = 102;
  kinds.push_back(base);
  base.kind = env::Kind::random_walks;
  base.seed = 103;
  kinds.push_back(base);
  kinds.push_back(env::EnvConfig::frozen_field(1, 3, t, {{Coord{}, 0.75}, {Coord::on_axis(0, 1), -2.0}}));

  const std::vector<double> zero{0.0};
  double worst = 0.0;
  for (const auto& c : kinds) {
    const auto traj = env::sample_env(c);
    const auto est = walk::lyapunov_sweep(traj, zero, t, 16, 7).front();
    const double expect = origin_integral(traj, t) / t;
    worst = std::max(worst, std::abs(est.lambda_hat - expect) / std::max(1.0, std::abs(expect)));
  }
  const double long_t = 2000.0;
  const auto traj = env::sample_env(env::EnvConfig::two_state_spin(1, 2, long_t, 1.0, 104));
  const auto est = walk::lyapunov_sweep(traj, zero, long_t, 16, 7).front();
  const double gap = std::abs(est.lambda_hat - env::env_mean(traj.config()));
  return {worst <= kExactRel && gap <= kLongRunGap,
          "4 kinds, worst relative error " + fmt(worst) + "; t=2000 gap " + fmt(gap)};
}

Verdict c2_large_kappa_trend() {
  const auto r = run("lyapunov-sweep",
                     config("seed = 12\n[env]\nkind = spin-markov\ndim = 1\nvalues = -1 1\nflip_rate = 1\n"
                            "[walk]\nkappas = 1 100\nt = 200\nreplicas = 100000\nboundary = periodic\n",
                            kOut / "c2"));
  const auto est = r.of("estimate");
  if (est.size() != 2) return {false, "missing estimates"};
  const double e1 = est[0].at("excess").get<double>();
  const double s1 = est[0].at("stderr").get<double>();
  const double e100 = est[1].at("excess").get<double>();
  return {e1 > kStderrMultiple * s1 && e100 < e1,
          "excess(1) " + fmt(e1) + " vs 3 stderr " + fmt(kStderrMultiple * s1) + "; excess(100) " + fmt(e100)};
}

Verdict c3_oracle() {
  const auto r = run("mc-vs-oracle", config("seed = 3\nthreads = " + std::to_string(workers()) +
                                                "\n[oracle]\ninstances = 20\ndim = 1\nbox_radius = 6\nt = 1\n"
                                                "kappas = 0.5 1 2\nreplicas = 20000\n",
                                            kOut / "c3"));
  std::size_t within = 0;
  const auto comps = r.of("comparison");
  for (const auto& c : comps) within += std::abs(c.at("z").get<double>()) <= kZMax ? 1 : 0;
  return {comps.size() == 20 && within >= kOracleNeeded,
          std::to_string(within) + "/" + std::to_string(comps.size()) + " with |z| <= 3"};
}

Verdict c4_rearrangement() {
  const auto r = run("rearrange-verify", config("seed = 2\nthreads = " + std::to_string(workers()) +
                                                    "\n[rearrangement]\nfunctions = 10000\nriesz = 10000\n"
                                                    "multisum = 1000\nmgf_instances = 0\n",
                                                kOut / "c4"));
  const auto t = tallies(r);
  const std::map<std::string, std::size_t> need{{"equimeasurability", 10000}, {"idempotence", 10000},
                                                {"monotonicity", 10000},      {"order_preservation", 10000},
                                                {"riesz", 10000},             {"multisum", 1000}};
  bool ok = true;
  std::size_t violations = 0;
  for (const auto& [name, n] : need) {
    const auto it = t.find(name);
    if (it == t.end() || it->second.at("checks").get<std::size_t>() != n) {
      ok = false;
      continue;
    }
    violations += it->second.at("violations").get<std::size_t>();
  }
  return {ok && violations == 0, std::to_string(violations) + " violations over 6 families"};
}

Verdict c5_localtime_mgf() {
  const auto r = run("rearrange-verify", config("seed = 2\nthreads = " + std::to_string(workers()) +
                                                    "\n[rearrangement]\nfunctions = 0\nriesz = 0\nmultisum = 0\n"
                                                    "mgf_instances = 100\nmgf_dims = 1 2\nmgf_kappas = 0.5 2\n"
                                                    "mgf_t = 2\n",
                                                kOut / "c5"));
  const auto recs = r.of("mgf");
  const std::size_t held = count_true(recs, "holds");
  return {recs.size() == 100 && held == recs.size(),
          std::to_string(held) + "/" + std::to_string(recs.size()) + " instances hold"};
}

Verdict c6_neumann_and_bound() {
  const auto r = run("spectral-verify", config("seed = 4\nthreads = " + std::to_string(workers()) +
                                                   "\n[spectral]\nneumann_dims = 1 2 3 4\nneumann_side = 6\n"
                                                   "neumann_functions = 1000\nneumann_partitions = 10\n"
                                                   "bound_potentials = 50\nfk_instances = 0\n",
                                               kOut / "c6"));
  const auto neumann = r.of("neumann");
  const auto bound = r.of("eigenvalue_bound");
  const std::size_t np = count_true(neumann, "passes");
  const std::size_t bp = count_true(bound, "holds_above_threshold");
  std::size_t biggest = 0;
  for (const auto& n : neumann) biggest = std::max(biggest, n.at("sites").get<std::size_t>());
  return {neumann.size() == 4 && np == 4 && biggest == 1296 && bound.size() == 50 && bp == 50,
          "Neumann " + std::to_string(np) + "/4 boxes (largest " + std::to_string(biggest) + " sites); bound " +
              std::to_string(bp) + "/50 potentials"};
}

Verdict c7_fk_spectral() {
  auto cfg = config("seed = 4\nthreads = " + std::to_string(workers()) +
                        "\n[spectral]\nneumann_functions = 0\nbound_potentials = 0\nfk_instances = 20\n"
                        "fk_kappas = 2 4 8\nA = 2\nm = 2\n",
                    kOut / "c7");
  cfg.set("spectral.neumann_dims", "");
  const auto r = run("spectral-verify", cfg);
  const auto recs = r.of("fk_spectral");
  const std::size_t held = count_true(recs, "holds");
  const std::size_t rr = count_true(recs, "rayleigh_ritz");
  return {recs.size() == 20 && held == 20 && rr == 20,
          "inequality " + std::to_string(held) + "/20, Rayleigh-Ritz " + std::to_string(rr) + "/20"};
}

Verdict c8_localtime_eigen() {
  auto cfg = config("seed = 6\nthreads = " + std::to_string(workers()) +
                        "\n[localtime]\ninstances = 10\nt_grid = 5 10 20\ntrials = 10000\nlambda_max = 0\n",
                    kOut / "c8");
  cfg.set("localtime.excursion_kappas", "");
  const auto r = run("localtime-verify", cfg);
  const auto recs = r.of("localtime");
  std::size_t ok = 0;
  for (const auto& j : recs)
    ok += j.at("mu_dominates").get<bool>() && j.at("residual_decreasing").get<bool>() &&
                  j.at("trials").get<std::size_t>() == 10000
              ? 1
              : 0;
  return {recs.size() == 10 && ok == 10, std::to_string(ok) + "/10 instances"};
}

Verdict c9_poisson() {
  auto cfg = config("[localtime]\ninstances = 0\nlambda_max = 20\nlambda_step = 0.5\nk_max = 100\n", kOut / "c9");
  cfg.set("localtime.excursion_kappas", "");
  const auto r = run("localtime-verify", cfg);
  const auto recs = r.of("poisson_tail");
  if (recs.size() != 1) return {false, "missing record"};
  const auto checks = recs[0].at("checks").get<std::size_t>();
  const auto violations = recs[0].at("violations").get<std::size_t>();
  // 40 values of lambda, k from ceil(2 lambda + 2) to 100
  std::size_t expect = 0;
  for (int s = 1; s <= 40; ++s) expect += 100 - static_cast<std::size_t>(std::ceil(s + 2.0)) + 1;
  return {checks == expect && violations == 0,
          std::to_string(violations) + " violations in " + std::to_string(checks) + " (lambda, k) pairs"};
}

Verdict c10_maximal() {
  const auto r = run("localtime-verify",
                     config("seed = 6\n[localtime]\ninstances = 0\nlambda_max = 0\nexcursion_kappas = 0.5 1 2\n"
                            "excursion_ts = 1 10\nexcursion_cs = 1 3\nexcursion_paths = 100000\n",
                            kOut / "c10"));
  const auto recs = r.of("excursion");
  std::size_t ok = 0;
  for (const auto& j : recs) {
    const double f = j.at("frequency").get<double>();
    ok += f <= j.at("bound").get<double>() + kStderrMultiple * j.at("stderr").get<double>() &&
                  j.at("paths").get<std::size_t>() == 100000
              ? 1
              : 0;
  }
  return {recs.size() == 12 && ok == 12, std::to_string(ok) + "/" + std::to_string(recs.size()) + " grid points"};
}

Verdict c11_schedule() {
  std::string detail;
  bool ok = true;
  for (int d = 1; d <= 3; ++d) {
    // a eps (2d(2d+1) + 1) = 1/2 gives A = e^2
    const double a = 2.0;
    const double eps = 0.5 / (a * (2.0 * d * (2.0 * d + 1.0) + 1.0));
    char text[160];
    std::snprintf(text, sizeof text, "[schedule]\neps = %.17g\na = 2\ndim = %d\nR_max = 8\n", eps, d);
    const auto r = run("schedule-report", config(text, kOut / ("c11-" + std::to_string(d))));
    const auto s = r.of("schedule");
    const bool pass = r.outcome.code == cli::Exit::ok && s.size() == 1 && s[0].at("certificate").get<bool>() &&
                      s[0].at("ratio").get<double>() < 1.0 && s[0].at("A").get<double>() > 3.0;
    ok = ok && pass;
    detail += "d=" + std::to_string(d) + " ratio " + (s.empty() ? "?" : fmt(s[0].at("ratio").get<double>())) + "; ";
  }
  // A = e is rejected by the CLI and by the parameter constructor
  const auto rejected = run("schedule-report", config("[schedule]\neps = 1/14\na = 2\ndim = 1\n", kOut / "c11-e"));
  bool threw = false;
  try {
    ms::ScheduleParams(1.0 / 14.0, 2.0, 1.0, 1);
  } catch (const ParameterError&) {
    threw = true;
  }
  ok = ok && rejected.outcome.code == cli::Exit::config && threw;
  return {ok, detail + "A = e rejected: " + (threw && rejected.outcome.code == cli::Exit::config ? "yes" : "no")};
}

Verdict c12_determinism() {
  const std::map<std::string, std::string> configs{
      {"env-sample", "seed = 21\n[walk]\nkappas = 2\nt = 10\n"},
      {"lyapunov-sweep", "seed = 22\n[walk]\nkappas = 0 1 4\nt = 10\nreplicas = 4000\n"},
      {"mc-vs-oracle", "seed = 23\n[oracle]\ninstances = 3\nreplicas = 2000\n"},
      {"blocks-census", "seed = 24\n[env]\nvalues = 0 3\n[multiscale]\nA = 2\nalpha = 1\nm = 1\ndelta = 1\n"
                        "R_max = 2\nkappa = 1\nt = 8\npaths = 5\n"},
      {"mixing-probe", "seed = 25\n[env]\nvalues = 0 1\n[multiscale]\nA = 2\nalpha = 1\ndelta = 0.5\nR = 1\n"
                       "reps = 100\n"},
      {"schedule-report", "[schedule]\neps = 0.02\na = 2\ndim = 2\n"},
      {"rearrange-verify", "seed = 26\n[rearrangement]\nfunctions = 300\nriesz = 300\nmultisum = 30\n"
                           "mgf_instances = 4\n"},
      {"spectral-verify", "seed = 27\n[spectral]\nneumann_dims = 1 2\nneumann_functions = 50\n"
                          "neumann_partitions = 3\nbound_potentials = 3\nfk_instances = 3\n"},
      {"localtime-verify", "seed = 28\n[localtime]\ninstances = 2\ntrials = 200\nexcursion_kappas = 1\n"
                           "excursion_ts = 1\nexcursion_cs = 1\nexcursion_paths = 2000\n"},
  };
  std::size_t files = 0;
  std::vector<std::string> differing;
  auto compare = [&](const std::string& sub, const fs::path& a, const fs::path& b) {
    for (const auto& entry : fs::directory_iterator(a)) {
      ++files;
      if (slurp(entry.path()) != slurp(b / entry.path().filename())) differing.push_back(sub);
    }
  };
  for (const auto& [sub, text] : configs) {
    const fs::path a = kOut / "c12" / sub / "a";
    const fs::path b = kOut / "c12" / sub / "b";
    fs::remove_all(a);
    fs::remove_all(b);
    auto ca = config(text + "", a);
    auto cb = config(text + "", b);
    cb.set("threads", "3");
    run(sub, ca);
    run(sub, cb);
    if (sub == "lyapunov-sweep") {
      run("report", ca);
      run("report", cb);
    }
    compare(sub, a, b);
  }
  std::string detail = std::to_string(files) + " artifacts over 10 subcommands";
  for (const auto& d : differing) detail += "; differs: " + d;
  return {differing.empty() && files == 13, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::pair<double, std::function<Verdict()>>>> criteria{
      {"kappa = 0 exactness", {10.0, c1_kappa_zero}},
      {"large-kappa trend", {600.0, c2_large_kappa_trend}},
      {"oracle agreement", {120.0, c3_oracle}},
      {"rearrangement suite", {60.0, c4_rearrangement}},
      {"local-time moment inequality", {300.0, c5_localtime_mgf}},
      {"Neumann properties and eigenvalue bound", {180.0, c6_neumann_and_bound}},
      {"Feynman-Kac spectral bound", {180.0, c7_fk_spectral}},
      {"local-time eigenvalue bound", {180.0, c8_localtime_eigen}},
      {"Poisson tail", {1.0, c9_poisson}},
      {"maximal inequality", {120.0, c10_maximal}},
      {"schedule certificate", {1.0, c11_schedule}},
      {"determinism", {600.0, c12_determinism}},
  };
  fs::create_directories(kOut);
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& [name, spec] = criteria[i];
    const auto& [limit, fn] = spec;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool pass = v.pass && secs < limit;
    failed += pass ? 0 : 1;
    std::printf("%s %2zu %s: %s [%.2f s, limit %.0f s]\n", pass ? "PASS" : "FAIL", i + 1, name.c_str(),
                v.detail.c_str(), secs, limit);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
