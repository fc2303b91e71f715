#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "pamlab/cli.hpp"
#include "pamlab/environment.hpp"
#include "pamlab/errors.hpp"
#include "pamlab/multiscale.hpp"
#include "pamlab/oracle.hpp"
#include "pamlab/rearrangement.hpp"
#include "pamlab/spectral.hpp"
#include "pamlab/walk.hpp"

namespace py = pybind11;
using namespace pamlab;

namespace {

Coord to_coord(const std::vector<std::int64_t>& x) {
  if (x.size() > static_cast<std::size_t>(kMaxDim)) throw ParameterError("at most 4 coordinates");
  Coord c;
  for (std::size_t j = 0; j < x.size(); ++j) c[static_cast<int>(j)] = x[j];
  return c;
}

std::vector<std::int64_t> from_coord(const Coord& c, int dim) {
  return {c.v.begin(), c.v.begin() + dim};
}

py::dict estimate_dict(const walk::LyapunovEstimate& e) {
  py::dict d;
  d["kappa"] = e.kappa;
  d["t"] = e.t;
  d["replicas"] = e.replicas;
  d["lambda_hat"] = e.lambda_hat;
  d["stderr"] = e.std_error;
  d["degenerate"] = e.degenerate;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Parabolic Anderson model in dynamic random environments";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
  py::register_exception<RangeError>(m, "RangeError", base.ptr());
  py::register_exception<ResourceError>(m, "ResourceError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<ContractError>(m, "ContractError", base.ptr());

  // environment
  py::class_<env::EnvConfig>(m, "EnvConfig")
      .def_static("two_state_spin", &env::EnvConfig::two_state_spin, py::arg("dim"), py::arg("box_radius"),
                  py::arg("horizon"), py::arg("flip_rate"), py::arg("seed"))
      .def_static(
          "frozen_field",
          [](int dim, std::int64_t radius, double horizon,
             const std::vector<std::pair<std::vector<std::int64_t>, double>>& values) {
            std::map<Coord, double> f;
            for (const auto& [x, v] : values) f[to_coord(x)] = v;
            return env::EnvConfig::frozen_field(dim, radius, horizon, std::move(f));
          },
          py::arg("dim"), py::arg("box_radius"), py::arg("horizon"), py::arg("values"))
      .def_property_readonly("kind", [](const env::EnvConfig& c) { return env::to_string(c.kind); })
      .def_readwrite("dim", &env::EnvConfig::dim)
      .def_readwrite("box_radius", &env::EnvConfig::box_radius)
      .def_readwrite("horizon", &env::EnvConfig::horizon)
      .def_readwrite("seed", &env::EnvConfig::seed)
      .def("to_json", &env::config_to_json);

  py::class_<env::EnvTrajectory>(m, "EnvTrajectory")
      .def_property_readonly("dim", &env::EnvTrajectory::dim)
      .def_property_readonly("horizon", &env::EnvTrajectory::horizon)
      .def_property_readonly("site_count", &env::EnvTrajectory::site_count)
      .def_property_readonly("event_count", &env::EnvTrajectory::event_count)
      .def_property_readonly("empirical_mean", &env::EnvTrajectory::empirical_mean)
      .def("value", [](const env::EnvTrajectory& t, const std::vector<std::int64_t>& x,
                       double s) { return t.value(to_coord(x), s); })
      .def("integrate", [](const env::EnvTrajectory& t, const std::vector<std::int64_t>& x, double a,
                           double b) { return t.integrate(t.site_index(to_coord(x)), a, b); })
      .def("write", [](const env::EnvTrajectory& t) {
        std::ostringstream s;
        env::write_trajectory(s, t);
        return s.str();
      });

  m.def("sample_env", [](const env::EnvConfig& c) { return env::sample_env(c); }, py::arg("config"));
  m.def("read_trajectory", [](const std::string& text) {
    std::istringstream s(text);
    return env::read_trajectory(s);
  });
  m.def("env_mean", &env::env_mean, py::arg("config"));

  // walks
  m.def(
      "sample_walk",
      [](double kappa, int dim, double t, std::uint64_t seed) {
        const auto p = walk::sample_walk(kappa, dim, t, seed);
        std::vector<std::vector<std::int64_t>> sites;
        for (const auto& x : p.sites) sites.push_back(from_coord(x, dim));
        return py::make_tuple(p.jump_times, sites);
      },
      py::arg("kappa"), py::arg("dim"), py::arg("t"), py::arg("seed"),
      "Jump times and visited sites of the rate-2d kappa walk on [0, t].");
  m.def(
      "lyapunov_sweep",
      [](const env::EnvTrajectory& traj, const std::vector<double>& kappas, double t, std::size_t replicas,
         std::uint64_t seed, bool periodic, unsigned threads) {
        walk::EstimateOptions o;
        o.boundary = periodic ? walk::BoundaryMode::periodic : walk::BoundaryMode::strict;
        o.bootstrap = 0;
        o.threads = threads;
        py::list out;
        for (const auto& e : walk::lyapunov_sweep(traj, kappas, t, replicas, seed, o)) out.append(estimate_dict(e));
        return out;
      },
      py::arg("traj"), py::arg("kappas"), py::arg("t"), py::arg("replicas"), py::arg("seed"),
      py::arg("periodic") = true, py::arg("threads") = 1);
  m.def("auto_box_radius", &walk::auto_box_radius, py::arg("kappa"), py::arg("t"), py::arg("dim"),
        py::arg("budget") = 1e-6);
  m.def("max_excursion_bound", &walk::max_excursion_bound, py::arg("kappa"), py::arg("t"), py::arg("c"));

  // oracle
  m.def(
      "mc_vs_oracle",
      [](const env::EnvTrajectory& traj, double kappa, double t, std::size_t replicas, std::uint64_t seed,
         unsigned threads) {
        const auto c = oracle::mc_vs_oracle_report(traj, kappa, t, replicas, seed, threads);
        py::dict d;
        d["mc_u"] = c.mc_u;
        d["mc_stderr"] = c.mc_stderr;
        d["oracle_u"] = c.oracle_u;
        d["z"] = c.z;
        d["hits"] = c.hits;
        return d;
      },
      py::arg("traj"), py::arg("kappa"), py::arg("t"), py::arg("replicas"), py::arg("seed"),
      py::arg("threads") = 1);

  // rearrangement
  m.def("spiral_rank", &rearr::spiral_rank);
  m.def("spiral_site", &rearr::spiral_site);
  m.def("rearrange", &rearr::rearrange_fn, py::arg("f"), "Decreasing rearrangement along 0, 1, -1, 2, ...");
  m.def(
      "riesz_check",
      [](const std::vector<double>& kernel, const rearr::FiniteFunction& f, const rearr::FiniteFunction& g) {
        const auto r = rearr::riesz_check(rearr::DistanceKernel{kernel}, f, g);
        return py::make_tuple(r.lhs, r.rhs, r.holds);
      },
      py::arg("kernel"), py::arg("f"), py::arg("g"));
  m.def(
      "property_suite",
      [](std::uint64_t seed, std::size_t functions, std::size_t riesz, std::size_t multisum) {
        py::dict out;
        for (const auto& t : rearr::property_suite(seed, functions, riesz, multisum))
          out[py::str(t.property)] = py::make_tuple(t.checks, t.violations);
        return out;
      },
      py::arg("seed"), py::arg("functions"), py::arg("riesz"), py::arg("multisum"),
      "Maps each property to (checks, violations).");

  // spectral
  m.def("dirichlet_top_1d", &spectral::dirichlet_top_1d);
  m.def(
      "poisson_tail",
      [](double lambda, long k) {
        const auto p = spectral::poisson_tail(lambda, k);
        return py::make_tuple(p.exact, p.bound, p.holds);
      },
      py::arg("lambda_"), py::arg("k"));

  // schedule
  m.def(
      "schedule_report",
      [](double eps, double a, double K1, int dim, int R_max) {
        const auto r = ms::schedule_report(eps, a, K1, dim, R_max);
        py::dict d;
        d["A"] = r.A;
        d["A_valid"] = r.A_valid;
        d["ratio"] = r.ratio;
        d["certificate"] = r.certificate;
        d["tail_bound"] = r.tail_bound;
        return d;
      },
      py::arg("eps"), py::arg("a"), py::arg("K1") = 1.0, py::arg("dim") = 1, py::arg("R_max") = 8);

  // command line
  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"pamlab"};
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out;
        std::ostringstream err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the pamlab command line; returns (exit code, stdout, stderr).");
}
