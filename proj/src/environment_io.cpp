#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "pamlab/environment.hpp"

namespace pamlab::env {

using nlohmann::json;

namespace {

json coord_json(const Coord& x, int dim) {
  json a = json::array();
  for (int j = 0; j < dim; ++j) a.push_back(x[j]);
  return a;
}

Coord coord_from(const json& a) {
  if (!a.is_array() || a.size() > static_cast<std::size_t>(kMaxDim))
    throw ConfigError("site coordinates must be an array of at most 4 integers");
  Coord x;
  for (std::size_t j = 0; j < a.size(); ++j) x[static_cast<int>(j)] = a[j].get<std::int64_t>();
  return x;
}

}  // namespace

std::string config_to_json(const EnvConfig& c) {
  json j;
  j["kind"] = to_string(c.kind);
  j["dim"] = c.dim;
  j["box_radius"] = c.box_radius;
  j["horizon"] = c.horizon;
  j["seed"] = c.seed;
  switch (c.kind) {
    case Kind::spin_markov:
      j["values"] = c.spin.values;
      j["rates"] = c.spin.rates;
      break;
    case Kind::zero_range:
      j["rho"] = c.zero_range.rho;
      j["beta"] = c.zero_range.beta;
      break;
    case Kind::random_walks:
      j["rho"] = c.walks.rho;
      j["gamma"] = c.walks.gamma;
      j["shift"] = c.walks.shift;
      break;
    case Kind::frozen: {
      json sites = json::array();
      for (const auto& [x, v] : c.frozen) sites.push_back({{"site", coord_json(x, c.dim)}, {"value", v}});
      j["sites"] = sites;
      break;
    }
    case Kind::derived:
      break;
  }
  return j.dump();
}

EnvConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed environment config: ") + e.what());
  }
  try {
    EnvConfig c;
    c.kind = kind_from_string(j.at("kind").get<std::string>());
    c.dim = j.at("dim").get<int>();
    c.box_radius = j.at("box_radius").get<std::int64_t>();
    c.horizon = j.at("horizon").get<double>();
    c.seed = j.value("seed", std::uint64_t{0});
    switch (c.kind) {
      case Kind::spin_markov:
        c.spin.values = j.at("values").get<std::vector<double>>();
        c.spin.rates = j.at("rates").get<std::vector<std::vector<double>>>();
        break;
      case Kind::zero_range:
        c.zero_range.rho = j.at("rho").get<double>();
        c.zero_range.beta = j.at("beta").get<double>();
        break;
      case Kind::random_walks:
        c.walks.rho = j.at("rho").get<double>();
        c.walks.gamma = j.at("gamma").get<double>();
        c.walks.shift = j.value("shift", 0.0);
        break;
      case Kind::frozen:
        for (const auto& s : j.value("sites", json::array()))
          c.frozen[coord_from(s.at("site"))] = s.at("value").get<double>();
        break;
      case Kind::derived:
        break;
    }
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid environment config: ") + e.what());
  }
}

void write_trajectory(std::ostream& out, const EnvTrajectory& traj) {
  const EnvConfig& c = traj.config();
  out << "# pamlab-trajectory 1\n";
  out << "# config " << config_to_json(c) << '\n';
  out << "# seed " << c.seed << '\n';
  std::ostringstream line;
  line << std::setprecision(17);
  for (std::size_t site = 0; site < traj.site_count(); ++site) {
    const std::string where = to_string(traj.torus().coord(site), c.dim);
    for (const Event& e : traj.events(site)) {
      line.str("");
      line << where << ' ' << e.time << ' ' << e.value << '\n';
      out << line.str();
    }
  }
}

EnvTrajectory read_trajectory(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "# pamlab-trajectory 1")
    throw ConfigError("not a pamlab trajectory file");
  if (!std::getline(in, line) || line.rfind("# config ", 0) != 0)
    throw ConfigError("trajectory file lacks a config header");
  EnvConfig c = config_from_json(line.substr(9));
  if (!std::getline(in, line) || line.rfind("# seed ", 0) != 0)
    throw ConfigError("trajectory file lacks a seed header");
  c.seed = std::stoull(line.substr(7));

  const BoxDomain torus(c.dim, c.box_radius, Boundary::torus);
  std::vector<std::vector<Event>> events(torus.size());
  std::size_t lineno = 3;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream is(line);
    Coord x;
    for (int j = 0; j < c.dim; ++j) is >> x[j];
    Event e{};
    is >> e.time >> e.value;
    if (!is || !torus.contains(x))
      throw ConfigError("malformed event on line " + std::to_string(lineno));
    events[torus.index(x)].push_back(e);
  }
  try {
    return EnvTrajectory(std::move(c), std::move(events));
  } catch (const ContractError& e) {
    throw ConfigError(std::string("inconsistent trajectory file: ") + e.what());
  }
}

}  // namespace pamlab::env
