#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "pamlab/cli.hpp"
#include "pamlab/errors.hpp"
#include "pamlab/multiscale.hpp"
#include "pamlab/oracle.hpp"
#include "pamlab/parallel.hpp"
#include "pamlab/rearrangement.hpp"
#include "pamlab/report.hpp"
#include "pamlab/spectral.hpp"
#include "pamlab/walk.hpp"

namespace pamlab::cli {

namespace {

using Json = nlohmann::ordered_json;

// Stream indices split off the master seed, one per role.
enum Stream : std::uint64_t {
  env_stream = 0,
  walk_stream = 1,
  oracle_env_stream = 2,
  oracle_walk_stream = 3,
  rearrangement_stream = 4,
  mgf_stream = 5,
  census_stream = 6,
  mixing_stream = 7,
  neumann_stream = 8,
  bound_stream = 9,
  fk_stream = 10,
  localtime_stream = 11,
  excursion_stream = 12,
};

std::uint64_t seed_for(const Globals& g, Stream s) { return stream_seed(g.seed, s); }

// Collects the lines of one artifact and writes them in one go.
class Artifact {
 public:
  Artifact(const Globals& g, const std::string& subcommand, const std::string& ext)
      : path_(g.out / (subcommand + "." + ext)), jsonl_(ext == "jsonl") {
    if (jsonl_) {
      Json h;
      h["record"] = "header";
      h["subcommand"] = subcommand;
      h["schema_version"] = kSchemaVersion;
      h["config_hash"] = hex(g.config_hash);
      h["seed"] = g.seed;
      line(h.dump());
    } else if (ext == "csv") {
      line("# pamlab " + subcommand + " config_hash=" + hex(g.config_hash) + " seed=" + std::to_string(g.seed));
    }
  }

  void line(const std::string& s) {
    body_ += s;
    body_ += '\n';
  }
  void record(const Json& j) { line(j.dump()); }
  std::string& body() { return body_; }

  std::filesystem::path write(Outcome& o) const {
    std::filesystem::create_directories(path_.parent_path());
    std::ofstream out(path_, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path_.string());
    out << body_;
    if (!out) throw ResourceError("failed writing " + path_.string());
    o.artifacts.push_back(path_);
    return path_;
  }

 private:
  std::filesystem::path path_;
  bool jsonl_;
  std::string body_;
};

Json parsed(const std::string& json) { return Json::parse(json); }

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

struct Tally {
  std::size_t checks = 0;
  std::size_t violations = 0;
  void add(bool ok) {
    ++checks;
    if (!ok) ++violations;
  }
};

std::string tally_line(const std::string& what, const Tally& t) {
  return what + ": " + std::to_string(t.violations) + " violations in " + std::to_string(t.checks) + " checks";
}

// --- environment -----------------------------------------------------------

env::EnvConfig env_config(const Config& cfg, std::uint64_t seed, double default_horizon,
                          std::int64_t auto_radius) {
  env::EnvConfig c;
  c.kind = env::kind_from_string(cfg.text("env.kind", "spin-markov"));
  c.dim = static_cast<int>(cfg.integer("env.dim", 1));
  c.horizon = cfg.number("env.horizon", default_horizon);
  const std::string radius = cfg.text("env.box_radius", "auto");
  if (radius == "auto") {
    c.box_radius = auto_radius > 0 ? auto_radius : 8;
  } else {
    c.box_radius = cfg.integer("env.box_radius", 8);
  }
  c.seed = seed;
  switch (c.kind) {
    case env::Kind::spin_markov: {
      c.spin.values = cfg.numbers("env.values", {-1.0, 1.0});
      const std::size_t n = c.spin.values.size();
      if (n < 2) throw ConfigError("env.values needs at least two states");
      const auto rates = cfg.numbers("env.rates", {});
      c.spin.rates.assign(n, std::vector<double>(n, 0.0));
      if (!rates.empty()) {
        if (rates.size() != n * n) throw ConfigError("env.rates must list n*n entries");
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) c.spin.rates[i][j] = i == j ? 0.0 : rates[i * n + j];
      } else {
        const double r = cfg.number("env.flip_rate", 1.0);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) c.spin.rates[i][j] = i == j ? 0.0 : r / static_cast<double>(n - 1);
      }
      break;
    }
    case env::Kind::zero_range:
      c.zero_range.rho = cfg.number("env.rho", 1.0);
      c.zero_range.beta = cfg.number("env.beta", 1.0);
      break;
    case env::Kind::random_walks:
      c.walks.rho = cfg.number("env.rho", 1.0);
      c.walks.gamma = cfg.number("env.gamma", 1.0);
      c.walks.shift = cfg.number("env.shift", 0.0);
      break;
    case env::Kind::frozen: {
      const double lo = cfg.number("env.low", -1.0);
      const double hi = cfg.number("env.high", 1.0);
      if (!(hi >= lo)) throw ConfigError("env.high must be >= env.low");
      const BoxDomain torus(c.dim, c.box_radius, Boundary::torus);
      Rng rng = make_rng(seed, 0);
      std::uniform_real_distribution<double> u(lo, hi);
      for (std::size_t i = 0; i < torus.size(); ++i) c.frozen[torus.coord(i)] = u(rng);
      break;
    }
    case env::Kind::derived:
      throw ConfigError("env.kind 'derived' cannot be sampled");
  }
  try {
    c.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("[env] ") + e.what());
  }
  return c;
}

Json env_record(const env::EnvTrajectory& traj) {
  const auto& c = traj.config();
  Json j;
  j["record"] = "environment";
  j["kind"] = env::to_string(c.kind);
  j["dim"] = c.dim;
  j["box_radius"] = c.box_radius;
  j["horizon"] = c.horizon;
  j["env_seed"] = c.seed;
  j["events"] = traj.event_count();
  j["env_mean"] = env::env_mean(c);
  j["empirical_mean"] = traj.empirical_mean();
  return j;
}

Outcome env_sample(const Config& cfg, const Globals& g) {
  const double t = cfg.number("walk.t", 10.0);
  const auto kappas = cfg.numbers("walk.kappas", {1.0});
  const int dim = static_cast<int>(cfg.integer("env.dim", 1));
  const double kmax = *std::max_element(kappas.begin(), kappas.end());
  const auto c = env_config(cfg, seed_for(g, env_stream), t, walk::auto_box_radius(kmax, t, dim));
  const auto traj = env::sample_env(c, g.budget);

  Outcome o;
  std::ostringstream dump;
  env::write_trajectory(dump, traj);
  std::string body = dump.str();
  // after the three header lines
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) pos = body.find('\n', pos) + 1;
  body.insert(pos, "# config_hash " + hex(g.config_hash) + "\n");
  Artifact traj_file(g, "env-sample", "traj");
  traj_file.body() = body;
  traj_file.write(o);

  Artifact summary(g, "env-sample", "jsonl");
  summary.record(env_record(traj));
  const auto diag = env::stationarity_diagnostic(traj);
  Json d;
  d["record"] = "stationarity";
  d["mean_full"] = diag.mean_full;
  d["mean_late"] = diag.mean_late;
  d["stderr_full"] = diag.stderr_full;
  d["stderr_late"] = diag.stderr_late;
  d["consistent"] = diag.consistent;
  summary.record(d);
  summary.write(o);
  o.summary.push_back("sampled " + std::to_string(traj.event_count()) + " events on " +
                      std::to_string(traj.site_count()) + " sites, empirical mean " + fmt(traj.empirical_mean()));
  return o;
}

// --- walk ------------------------------------------------------------------

walk::EstimateOptions estimate_options(const Config& cfg, const Globals& g) {
  walk::EstimateOptions opt;
  const std::string ic = cfg.text("walk.initial", "delta0");
  if (ic == "delta0") {
    opt.initial = walk::InitialCondition::delta0;
  } else if (ic == "ones") {
    opt.initial = walk::InitialCondition::ones;
  } else {
    throw ConfigError("walk.initial must be delta0 or ones");
  }
  const std::string b = cfg.text("walk.boundary", "periodic");
  if (b == "periodic") {
    opt.boundary = walk::BoundaryMode::periodic;
  } else if (b == "strict") {
    opt.boundary = walk::BoundaryMode::strict;
  } else {
    throw ConfigError("walk.boundary must be periodic or strict");
  }
  opt.bootstrap = cfg.count("walk.bootstrap", 0);
  opt.threads = g.threads;
  return opt;
}

Outcome lyapunov_sweep(const Config& cfg, const Globals& g) {
  const auto kappas = cfg.numbers("walk.kappas", {0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0});
  if (kappas.empty()) throw ConfigError("walk.kappas is empty");
  const double t = cfg.number("walk.t", 20.0);
  const std::size_t replicas = cfg.count("walk.replicas", 10000);
  const int dim = static_cast<int>(cfg.integer("env.dim", 1));
  const double kmax = *std::max_element(kappas.begin(), kappas.end());
  const auto c = env_config(cfg, seed_for(g, env_stream), t, walk::auto_box_radius(kmax, t, dim));
  const auto traj = env::sample_env(c, g.budget);
  const auto rows = walk::lyapunov_sweep(traj, kappas, t, replicas, seed_for(g, walk_stream), estimate_options(cfg, g));

  Outcome o;
  Artifact csv(g, "lyapunov-sweep", "csv");
  std::ostringstream table;
  walk::write_sweep_csv(table, rows);
  csv.body() += table.str();
  csv.write(o);

  Artifact jl(g, "lyapunov-sweep", "jsonl");
  const Json envj = env_record(traj);
  jl.record(envj);
  const double mean = envj["env_mean"].get<double>();
  for (const auto& r : rows) {
    Json j;
    j["record"] = "estimate";
    j["kappa"] = r.kappa;
    j["t"] = r.t;
    j["replicas"] = r.replicas;
    j["lambda_hat"] = r.lambda_hat;
    j["stderr"] = r.std_error;
    j["excess"] = r.lambda_hat - mean;
    j["degenerate"] = r.degenerate;
    jl.record(j);
    o.summary.push_back("kappa " + fmt(r.kappa) + ": lambda_hat " + fmt(r.lambda_hat) + " +- " + fmt(r.std_error));
  }
  jl.write(o);
  o.summary.push_back("E xi = " + fmt(mean));
  return o;
}

Outcome mc_vs_oracle(const Config& cfg, const Globals& g) {
  const std::size_t instances = cfg.count("oracle.instances", 20);
  const int dim = static_cast<int>(cfg.integer("oracle.dim", 1));
  const std::int64_t radius = cfg.integer("oracle.box_radius", 6);
  const double t = cfg.number("oracle.t", 1.0);
  const auto kappas = cfg.numbers("oracle.kappas", {0.5, 1.0, 2.0});
  const std::size_t replicas = cfg.count("oracle.replicas", 20000);
  const double lo = cfg.number("oracle.low", -1.0);
  const double hi = cfg.number("oracle.high", 1.0);
  const double min_pass = cfg.number("oracle.min_pass", 0.95);
  const double z_max = cfg.number("oracle.z_max", 3.0);
  if (kappas.empty()) throw ConfigError("oracle.kappas is empty");
  if (!(hi >= lo)) throw ConfigError("oracle.high must be >= oracle.low");

  Outcome o;
  Artifact jl(g, "mc-vs-oracle", "jsonl");
  std::size_t passed = 0;
  const BoxDomain torus(dim, radius, Boundary::torus);
  for (std::size_t i = 0; i < instances; ++i) {
    const std::uint64_t es = stream_seed(seed_for(g, oracle_env_stream), i);
    Rng rng = make_rng(es, 0);
    std::uniform_real_distribution<double> u(lo, hi);
    std::map<Coord, double> field;
    for (std::size_t s = 0; s < torus.size(); ++s) field[torus.coord(s)] = u(rng);
    const auto traj = env::sample_env(env::EnvConfig::frozen_field(dim, radius, t, std::move(field)), g.budget);
    const double kappa = kappas[i % kappas.size()];
    const auto c = oracle::mc_vs_oracle_report(traj, kappa, t, replicas,
                                               stream_seed(seed_for(g, oracle_walk_stream), i), g.threads);
    const bool ok = std::abs(c.z) <= z_max;
    passed += ok ? 1 : 0;
    Json j = parsed(oracle::to_json(c));
    j["record"] = "comparison";
    j["instance"] = i;
    j["env_seed"] = es;
    j["within"] = ok;
    jl.record(j);
  }
  const auto needed = static_cast<std::size_t>(std::ceil(min_pass * static_cast<double>(instances) - 1e-9));
  Json s;
  s["record"] = "summary";
  s["instances"] = instances;
  s["passed"] = passed;
  s["needed"] = needed;
  jl.record(s);
  jl.write(o);
  o.summary.push_back(std::to_string(passed) + "/" + std::to_string(instances) + " instances with |z| <= " +
                      fmt(z_max) + " (need " + std::to_string(needed) + ")");
  if (passed < needed) o.code = Exit::violation;
  return o;
}

// --- multiscale ------------------------------------------------------------

ms::BlockSpec block_spec(const Config& cfg, int dim) {
  ms::BlockSpec s;
  s.A = cfg.number("multiscale.A", 2.0);
  s.alpha = cfg.number("multiscale.alpha", 1.0);
  s.b = static_cast<int>(cfg.integer("multiscale.b", 0));
  s.c = static_cast<int>(cfg.integer("multiscale.c", 0));
  s.m = cfg.number("multiscale.m", 1.0);
  s.dim = dim;
  s.delta = cfg.number("multiscale.delta", 0.5);
  s.K = cfg.number("multiscale.K", 0.0);
  try {
    s.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("[multiscale] ") + e.what());
  }
  return s;
}

ms::Field field_of(const Config& cfg) {
  const std::string f = cfg.text("multiscale.field", "raw");
  if (f == "raw") return ms::Field::raw;
  if (f == "truncated") return ms::Field::truncated;
  throw ConfigError("multiscale.field must be raw or truncated");
}

Outcome blocks_census(const Config& cfg, const Globals& g) {
  const int dim = static_cast<int>(cfg.integer("env.dim", 1));
  const auto spec = block_spec(cfg, dim);
  const int R_max = static_cast<int>(cfg.integer("multiscale.R_max", 1));
  if (R_max < 1) throw ConfigError("multiscale.R_max must be >= 1");
  const double kappa = cfg.number("multiscale.kappa", 1.0);
  const double t = cfg.number("multiscale.t", 4.0);
  const std::size_t paths = cfg.count("multiscale.paths", 10);
  const auto field = field_of(cfg);

  // The environment has to cover every (R_max + 1)-block the walks can touch.
  const double top = spec.time_scale(R_max + 1);
  const double horizon = (std::ceil(t / top) + 1.0 + spec.c) * top;
  const auto reach = static_cast<std::int64_t>(std::ceil(2.0 * (1.0 + spec.b) * spec.space_scale(R_max + 1)));
  const auto c = env_config(cfg, seed_for(g, env_stream), horizon, walk::auto_box_radius(kappa, t, dim) + 2 * reach + 1);
  const auto traj = env::sample_env(c, g.budget);

  Outcome o;
  Artifact jl(g, "blocks-census", "jsonl");
  jl.record(env_record(traj));
  std::vector<std::size_t> xi(static_cast<std::size_t>(R_max), 0);
  std::vector<std::size_t> psi(static_cast<std::size_t>(R_max), 0);
  for (std::size_t p = 0; p < paths; ++p) {
    const auto path = walk::sample_walk(kappa, dim, t, stream_seed(seed_for(g, census_stream), p));
    for (const auto& row : ms::block_census(traj, path, spec, R_max, field)) {
      Json j = parsed(ms::to_json(row, dim));
      j["record"] = "census";
      j["path"] = p;
      jl.record(j);
      xi[static_cast<std::size_t>(row.R - 1)] += row.xi_count;
      psi[static_cast<std::size_t>(row.R - 1)] += row.psi_count;
    }
  }
  jl.write(o);
  for (int R = 1; R <= R_max; ++R)
    o.summary.push_back("R = " + std::to_string(R) + ": " + std::to_string(xi[static_cast<std::size_t>(R - 1)]) +
                        " bad-block entries, " + std::to_string(psi[static_cast<std::size_t>(R - 1)]) +
                        " good-parent entries over " + std::to_string(paths) + " paths");
  return o;
}

Outcome mixing_probe(const Config& cfg, const Globals& g) {
  const int dim = static_cast<int>(cfg.integer("env.dim", 1));
  const auto spec = block_spec(cfg, dim);
  const int R = static_cast<int>(cfg.integer("multiscale.R", 1));
  const std::size_t reps = cfg.count("multiscale.reps", 200);
  const auto c = env_config(cfg, seed_for(g, mixing_stream), 1.0, -1);
  const auto r = ms::mixing_probe(c, spec, R, reps, field_of(cfg), g.budget);

  Outcome o;
  Artifact jl(g, "mixing-probe", "jsonl");
  Json j;
  j["record"] = "mixing";
  j["R"] = r.R;
  j["reps"] = r.reps;
  j["hits"] = r.hits;
  j["frequency"] = r.frequency;
  j["ci_lower"] = r.ci.lower;
  j["ci_upper"] = r.ci.upper;
  j["bound"] = r.bound;
  j["verdict"] = ms::to_string(r.verdict);
  jl.record(j);
  jl.write(o);
  o.summary.push_back("mixing event frequency " + fmt(r.frequency) + " (" + std::to_string(r.hits) + "/" +
                      std::to_string(r.reps) + ") against bound " + fmt(r.bound) + ": " +
                      ms::to_string(r.verdict));
  if (r.verdict == ms::Verdict::violated) o.code = Exit::violation;
  return o;
}

Outcome schedule_report(const Config& cfg, const Globals& g) {
  const double eps = cfg.number("schedule.eps", 1.0 / 14.0);
  const double a = cfg.number("schedule.a", 2.0);
  const double K1 = cfg.number("schedule.K1", 1.0);
  const int dim = static_cast<int>(cfg.integer("schedule.dim", 1));
  const int R_max = static_cast<int>(cfg.integer("schedule.R_max", 6));
  const bool enforce = cfg.flag("schedule.enforce", true);
  const auto r = ms::schedule_report(eps, a, K1, dim, R_max);

  Outcome o;
  Artifact csv(g, "schedule-report", "csv");
  std::ostringstream line;
  line << std::setprecision(17);
  line << "# A=" << r.A << " ratio=" << r.ratio << '\n';
  line << "R,delta,rho,log10_rho,L,log10_L,term,partial_sum\n";
  for (const auto& row : r.rows)
    line << row.R << ',' << row.delta << ',' << row.rho << ',' << row.log10_rho << ',' << row.L << ','
         << row.log10_L << ',' << row.term << ',' << row.partial_sum << '\n';
  csv.body() += line.str();
  csv.write(o);

  Artifact jl(g, "schedule-report", "jsonl");
  Json j;
  j["record"] = "schedule";
  j["eps"] = r.eps;
  j["a"] = r.a;
  j["K1"] = r.K1;
  j["dim"] = r.dim;
  j["A"] = r.A;
  j["A_valid"] = r.A_valid;
  j["ratio"] = r.ratio;
  j["certificate"] = r.certificate;
  j["tail_bound"] = r.tail_bound;
  jl.record(j);
  jl.write(o);
  o.summary.push_back("A = " + fmt(r.A) + ", ratio = " + fmt(r.ratio) + ", tail past R_max <= " + fmt(r.tail_bound));
  if (!r.certificate) {
    o.code = Exit::violation;
  } else if (enforce && !r.A_valid) {
    o.summary.push_back("A = " + fmt(r.A) + " does not exceed 3; parameters rejected");
    o.code = Exit::config;
  }
  return o;
}

// --- rearrangement -----------------------------------------------------------

Outcome rearrange_verify(const Config& cfg, const Globals& g) {
  const std::size_t functions = cfg.count("rearrangement.functions", 10000);
  const std::size_t riesz = cfg.count("rearrangement.riesz", 10000);
  const std::size_t multisum = cfg.count("rearrangement.multisum", 1000);
  const std::int64_t radius = cfg.integer("rearrangement.radius", 8);
  const std::size_t mgf_n = cfg.count("rearrangement.mgf_instances", 100);
  const auto dims = cfg.numbers("rearrangement.mgf_dims", {1.0, 2.0});
  const auto kappas = cfg.numbers("rearrangement.mgf_kappas", {0.5, 2.0});
  const double t = cfg.number("rearrangement.mgf_t", 2.0);
  if (mgf_n > 0 && (dims.empty() || kappas.empty())) throw ConfigError("mgf dims and kappas must be non-empty");

  Outcome o;
  Artifact jl(g, "rearrange-verify", "jsonl");
  bool bad = false;
  for (const auto& tally :
       rearr::property_suite(seed_for(g, rearrangement_stream), functions, riesz, multisum, radius, g.threads)) {
    Json j;
    j["record"] = "property";
    j["property"] = tally.property;
    j["checks"] = tally.checks;
    j["violations"] = tally.violations;
    j["failing_seeds"] = tally.failing_seeds;
    jl.record(j);
    o.summary.push_back(tally_line(tally.property, Tally{tally.checks, tally.violations}));
    bad = bad || tally.violations > 0;
  }

  std::vector<rearr::MgfRecord> recs(mgf_n);
  std::vector<int> rec_dim(mgf_n);
  std::vector<double> rec_kappa(mgf_n);
  parallel_for(mgf_n, g.threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const std::uint64_t s = stream_seed(seed_for(g, mgf_stream), i);
      rec_dim[i] = static_cast<int>(dims[i % dims.size()]);
      rec_kappa[i] = kappas[(i / dims.size()) % kappas.size()];
      recs[i] = rearr::localtime_mgf_check(rearr::random_mgf_instance(s, rec_dim[i], rec_kappa[i], t), s);
    }
  });
  Tally mgf;
  for (std::size_t i = 0; i < mgf_n; ++i) {
    Json j = parsed(rearr::to_json(recs[i]));
    j["record"] = "mgf";
    j["dim"] = rec_dim[i];
    j["kappa"] = rec_kappa[i];
    jl.record(j);
    mgf.add(recs[i].holds);
  }
  jl.write(o);
  if (mgf_n > 0) o.summary.push_back(tally_line("local-time moment inequality", mgf));
  if (bad || mgf.violations > 0) o.code = Exit::violation;
  return o;
}

// --- spectral ----------------------------------------------------------------

spectral::IntBox cube(int dim, std::int64_t side) {
  spectral::IntBox b;
  for (int j = 0; j < dim; ++j) b.hi[j] = side;
  return b;
}

std::vector<double> powers_of_two(int lo, int hi) {
  std::vector<double> out;
  for (int k = lo; k <= hi; ++k) out.push_back(std::ldexp(1.0, k));
  return out;
}

Outcome spectral_verify(const Config& cfg, const Globals& g) {
  const auto ndims = cfg.numbers("spectral.neumann_dims", {1.0, 2.0, 3.0, 4.0});
  const std::int64_t nside = cfg.integer("spectral.neumann_side", 6);
  const std::size_t nfun = cfg.count("spectral.neumann_functions", 1000);
  const std::size_t nparts = cfg.count("spectral.neumann_partitions", 10);
  const std::size_t potentials = cfg.count("spectral.bound_potentials", 50);
  const std::int64_t bside = cfg.integer("spectral.bound_side", 12);
  const double delta = cfg.number("spectral.delta", 0.25);
  const double v_max = cfg.number("spectral.v_max", 4.0);
  const auto kgrid = cfg.numbers("spectral.kappas", powers_of_two(-2, 14));
  const std::size_t fk_n = cfg.count("spectral.fk_instances", 20);
  const auto fk_kappas = cfg.numbers("spectral.fk_kappas", {2.0, 4.0, 8.0});
  const double A = cfg.number("spectral.A", 2.0);
  const double m = cfg.number("spectral.m", 2.0);
  const std::int64_t fk_radius = cfg.integer("spectral.fk_radius", 40);
  const double flip = cfg.number("spectral.fk_flip_rate", 1.0);
  if (nside < 1 || bside < 1) throw ConfigError("box sides must be >= 1");
  if (fk_n > 0 && fk_kappas.empty()) throw ConfigError("spectral.fk_kappas is empty");

  Outcome o;
  Artifact jl(g, "spectral-verify", "jsonl");

  Tally neumann;
  for (std::size_t k = 0; k < ndims.size(); ++k) {
    const int d = static_cast<int>(ndims[k]);
    const auto box = cube(d, nside);
    Rng rng = make_rng(seed_for(g, neumann_stream), k);
    std::vector<spectral::PartitionSpec> parts;
    for (std::size_t p = 0; p < nparts; ++p) parts.push_back(spectral::PartitionSpec::random(d, box, rng));
    const auto r = spectral::verify_neumann_properties(d, box, parts, nfun, stream_seed(seed_for(g, neumann_stream), k));
    Json j = parsed(spectral::to_json(r));
    j["record"] = "neumann";
    jl.record(j);
    neumann.add(r.passes);
  }
  o.summary.push_back(tally_line("Neumann properties", neumann));

  Tally bound;
  std::vector<spectral::EigenBoundReport> reps(potentials);
  parallel_for(potentials, g.threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      Rng rng = make_rng(seed_for(g, bound_stream), i);
      const auto part = spectral::PartitionSpec::random(1, cube(1, bside), rng);
      const auto v = spectral::random_admissible_potential(part, delta, v_max, rng);
      reps[i] = spectral::verify_eigenvalue_bound(part, v, delta, kgrid);
    }
  });
  for (const auto& r : reps) {
    Json j = parsed(spectral::to_json(r));
    j["record"] = "eigenvalue_bound";
    jl.record(j);
    bound.add(r.holds_above_threshold);
  }
  o.summary.push_back(tally_line("eigenvalue bound above the sufficient threshold", bound));

  Tally fk;
  Tally rr;
  std::vector<spectral::FkSpectralReport> fks(fk_n);
  parallel_for(fk_n, g.threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const auto c = env::EnvConfig::two_state_spin(1, fk_radius, A, flip, stream_seed(seed_for(g, fk_stream), i));
      const auto traj = env::sample_env(c, g.budget);
      fks[i] = spectral::verify_fk_spectral_bound(traj, fk_kappas[i % fk_kappas.size()], A, m);
    }
  });
  for (std::size_t i = 0; i < fk_n; ++i) {
    Json j = parsed(spectral::to_json(fks[i]));
    j["record"] = "fk_spectral";
    j["instance"] = i;
    jl.record(j);
    fk.add(fks[i].holds);
    rr.add(fks[i].rayleigh_ritz);
  }
  jl.write(o);
  if (fk_n > 0) {
    o.summary.push_back(tally_line("Feynman-Kac spectral bound", fk));
    o.summary.push_back(tally_line("Rayleigh-Ritz ordering", rr));
  }
  if (neumann.violations + bound.violations + fk.violations + rr.violations > 0) o.code = Exit::violation;
  return o;
}

// --- local times -------------------------------------------------------------

struct NestedInstance {
  std::vector<spectral::Interval1d> intervals;
  std::vector<double> betas;
};

NestedInstance random_nested(std::uint64_t seed, std::int64_t max_radius) {
  Rng rng = make_rng(seed, 0);
  std::uniform_int_distribution<int> count(1, 3);
  std::uniform_int_distribution<std::int64_t> grow(0, std::max<std::int64_t>(1, max_radius / 3));
  std::uniform_real_distribution<double> beta(0.0, 1.5);
  NestedInstance inst;
  const int n = count(rng);
  std::int64_t a = -grow(rng);
  std::int64_t b = grow(rng);
  for (int i = 0; i < n; ++i) {
    if (i > 0) {
      a = std::max(-max_radius, a - grow(rng));
      b = std::min(max_radius, b + grow(rng));
    }
    inst.intervals.push_back({a, b});
    inst.betas.push_back(beta(rng));
  }
  return inst;
}

Outcome localtime_verify(const Config& cfg, const Globals& g) {
  const std::size_t instances = cfg.count("localtime.instances", 10);
  const auto kappas = cfg.numbers("localtime.kappas", {0.5, 1.0, 2.0});
  const auto t_grid = cfg.numbers("localtime.t_grid", {5.0, 10.0, 20.0});
  const std::size_t trials = cfg.count("localtime.trials", 10000);
  const double k2 = cfg.number("localtime.k2", 1.0);
  const std::int64_t max_radius = cfg.integer("localtime.max_radius", 6);
  const double lambda_max = cfg.number("localtime.lambda_max", 20.0);
  const double lambda_step = cfg.number("localtime.lambda_step", 0.5);
  const auto k_max = static_cast<long>(cfg.integer("localtime.k_max", 100));
  const auto ex_k = cfg.numbers("localtime.excursion_kappas", {0.5, 1.0, 2.0});
  const auto ex_t = cfg.numbers("localtime.excursion_ts", {1.0, 10.0});
  const auto ex_c = cfg.numbers("localtime.excursion_cs", {1.0, 3.0});
  const std::size_t ex_paths = cfg.count("localtime.excursion_paths", 100000);
  if (instances > 0 && kappas.empty()) throw ConfigError("localtime.kappas is empty");
  if (!(lambda_step > 0.0)) throw ConfigError("localtime.lambda_step must be > 0");

  Outcome o;
  Artifact jl(g, "localtime-verify", "jsonl");

  std::vector<spectral::LocalTimeReport> reps(instances);
  parallel_for(instances, g.threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const std::uint64_t s = stream_seed(seed_for(g, localtime_stream), i);
      const auto inst = random_nested(s, max_radius);
      reps[i] = spectral::verify_localtime_eigen_bound(inst.intervals, inst.betas, kappas[i % kappas.size()],
                                                       t_grid, k2, trials, s);
    }
  });
  Tally lt;
  for (std::size_t i = 0; i < instances; ++i) {
    Json j = parsed(spectral::to_json(reps[i]));
    j["record"] = "localtime";
    j["instance"] = i;
    jl.record(j);
    lt.add(reps[i].mu_dominates && reps[i].residual_decreasing);
  }
  if (instances > 0) o.summary.push_back(tally_line("local-time eigenvalue bound", lt));

  Tally poisson;
  Json worst;
  double worst_ratio = -1.0;
  for (int step = 1;; ++step) {
    const double lambda = lambda_step * step;
    if (lambda > lambda_max + 1e-12) break;
    for (long k = static_cast<long>(std::ceil(2.0 * lambda + 2.0)); k <= k_max; ++k) {
      const auto p = spectral::poisson_tail(lambda, k);
      poisson.add(p.holds);
      const double ratio = p.bound > 0.0 ? p.exact / p.bound : 0.0;
      if (ratio > worst_ratio) {
        worst_ratio = ratio;
        worst = Json{{"lambda", lambda}, {"k", k}, {"exact", p.exact}, {"bound", p.bound}};
      }
    }
  }
  Json pj;
  pj["record"] = "poisson_tail";
  pj["checks"] = poisson.checks;
  pj["violations"] = poisson.violations;
  pj["largest_ratio"] = worst_ratio;
  pj["largest_ratio_at"] = worst;
  jl.record(pj);
  o.summary.push_back(tally_line("Poisson tail bound", poisson));

  Tally ex;
  std::size_t idx = 0;
  for (double kappa : ex_k)
    for (double t : ex_t)
      for (double c : ex_c) {
        const auto r = walk::max_excursion_check(kappa, t, c, ex_paths, stream_seed(seed_for(g, excursion_stream), idx++));
        Json j;
        j["record"] = "excursion";
        j["kappa"] = r.kappa;
        j["t"] = r.t;
        j["c"] = r.c;
        j["paths"] = r.paths;
        j["hits"] = r.hits;
        j["frequency"] = r.frequency;
        j["stderr"] = r.std_error;
        j["bound"] = r.bound;
        j["passes"] = r.passes;
        jl.record(j);
        ex.add(r.passes);
      }
  jl.write(o);
  if (ex.checks > 0) o.summary.push_back(tally_line("maximal inequality", ex));
  if (lt.violations + poisson.violations + ex.violations > 0) o.code = Exit::violation;
  return o;
}

// --- report ------------------------------------------------------------------

Outcome report(const Config& cfg, const Globals& g) {
  const std::filesystem::path input = cfg.text("report.input", (g.out / "lyapunov-sweep").string());
  const auto width = static_cast<int>(cfg.integer("report.width", 720));
  const auto height = static_cast<int>(cfg.integer("report.height", 480));
  if (width < 200 || height < 150) throw ConfigError("report size must be at least 200 x 150");

  std::filesystem::path csv_path = input;
  csv_path += ".csv";
  std::filesystem::path jsonl_path = input;
  jsonl_path += ".jsonl";
  std::ifstream csv(csv_path);
  if (!csv) throw ConfigError("cannot open " + csv_path.string() + " (run lyapunov-sweep first)");
  std::ifstream jsonl(jsonl_path);
  if (!jsonl) throw ConfigError("cannot open " + jsonl_path.string());

  report::SweepPlot plot;
  plot.rows = report::read_sweep_csv(csv);
  std::string line;
  bool have_mean = false;
  while (std::getline(jsonl, line)) {
    const Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded()) throw ConfigError("malformed line in " + jsonl_path.string());
    if (j.value("record", "") == "environment") {
      plot.env_mean = j.at("env_mean").get<double>();
      have_mean = true;
    }
    if (j.value("record", "") == "header") plot.source = j.value("config_hash", "");
  }
  if (!have_mean) throw ConfigError(jsonl_path.string() + " lacks an environment record");
  plot.width = width;
  plot.height = height;
  plot.config_hash = hex(g.config_hash);
  plot.seed = g.seed;

  Outcome o;
  Artifact svg(g, "report", "svg");
  svg.body() = report::sweep_svg(plot);
  svg.write(o);
  o.summary.push_back("plotted " + std::to_string(plot.rows.size()) + " estimates against E xi = " + fmt(plot.env_mean));
  return o;
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{
      "env-sample",    "lyapunov-sweep",  "mc-vs-oracle",    "blocks-census",    "mixing-probe",
      "schedule-report", "rearrange-verify", "spectral-verify", "localtime-verify", "report"};
  return names;
}

Outcome run_subcommand(const std::string& name, const Config& cfg, const Globals& g) {
  if (name == "env-sample") return env_sample(cfg, g);
  if (name == "lyapunov-sweep") return lyapunov_sweep(cfg, g);
  if (name == "mc-vs-oracle") return mc_vs_oracle(cfg, g);
  if (name == "blocks-census") return blocks_census(cfg, g);
  if (name == "mixing-probe") return mixing_probe(cfg, g);
  if (name == "schedule-report") return schedule_report(cfg, g);
  if (name == "rearrange-verify") return rearrange_verify(cfg, g);
  if (name == "spectral-verify") return spectral_verify(cfg, g);
  if (name == "localtime-verify") return localtime_verify(cfg, g);
  if (name == "report") return report(cfg, g);
  throw ConfigError("unknown subcommand " + name);
}

}  // namespace pamlab::cli
