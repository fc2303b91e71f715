#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "pamlab/cli.hpp"
#include "pamlab/errors.hpp"
#include "pamlab/hash.hpp"

namespace pamlab::cli {

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"", {"schema_version", "seed", "threads", "out", "max_events", "max_sites"}},
      {"env",
       {"kind", "dim", "box_radius", "horizon", "values", "flip_rate", "rates", "rho", "beta", "gamma",
        "shift", "low", "high"}},
      {"walk", {"kappas", "t", "replicas", "initial", "boundary", "bootstrap"}},
      {"oracle", {"instances", "dim", "box_radius", "t", "kappas", "replicas", "low", "high", "min_pass", "z_max"}},
      {"multiscale",
       {"A", "alpha", "b", "c", "m", "delta", "K", "R", "R_max", "field", "kappa", "t", "paths", "reps"}},
      {"schedule", {"eps", "a", "K1", "dim", "R_max", "enforce"}},
      {"rearrangement",
       {"functions", "riesz", "multisum", "radius", "mgf_instances", "mgf_dims", "mgf_kappas", "mgf_t"}},
      {"spectral",
       {"neumann_dims", "neumann_side", "neumann_functions", "neumann_partitions", "bound_potentials",
        "bound_side", "delta", "v_max", "kappas", "fk_instances", "fk_kappas", "A", "m", "fk_radius",
        "fk_flip_rate"}},
      {"localtime",
       {"instances", "kappas", "t_grid", "trials", "k2", "max_radius", "lambda_max", "lambda_step", "k_max",
        "excursion_kappas", "excursion_ts", "excursion_cs", "excursion_paths"}},
      {"report", {"input", "width", "height"}},
  };
  return keys;
}

void check_key(const std::string& key) {
  const auto dot = key.rfind('.');
  const std::string section = dot == std::string::npos ? "" : key.substr(0, dot);
  const std::string name = dot == std::string::npos ? key : key.substr(dot + 1);
  const auto& keys = known_keys();
  auto it = keys.find(section);
  if (it == keys.end()) throw ConfigError("unknown config section [" + section + "]");
  if (it->second.count(name) == 0) throw ConfigError("unknown config key '" + key + "'");
}

std::vector<std::string> split(const std::string& value) {
  std::istringstream is(value);
  std::vector<std::string> out;
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

double parse_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ConfigError("'" + key + "': '" + s + "' is not a number");
  return v;
}

}  // namespace

Config Config::parse(std::istream& in) {
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_config(in);
  } catch (const CLI::Error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  Config c;
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    std::string key;
    for (const auto& p : item.parents) key += p + ".";
    key += item.name;
    check_key(key);
    if (c.values_.count(key)) throw ConfigError("duplicate config key '" + key + "'");
    std::vector<std::string> words;
    for (const auto& input : item.inputs)
      for (auto& w : split(input)) words.push_back(std::move(w));
    c.values_[key] = std::move(words);
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse(in);
}

void Config::set(const std::string& key, const std::string& value) {
  check_key(key);
  values_[key] = split(value);
}

const std::vector<std::string>* Config::find(const std::string& key) const {
  auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

std::string Config::text(const std::string& key, const std::string& fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  if (v->size() != 1) throw ConfigError("'" + key + "' takes a single value");
  return v->front();
}

double Config::number(const std::string& key, double fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  if (v->size() != 1) throw ConfigError("'" + key + "' takes a single value");
  // fractions such as 1/14 are accepted
  const std::string& s = v->front();
  const auto slash = s.find('/');
  if (slash != std::string::npos) {
    const double den = parse_double(key, s.substr(slash + 1));
    if (den == 0.0) throw ConfigError("'" + key + "': division by zero");
    return parse_double(key, s.substr(0, slash)) / den;
  }
  return parse_double(key, s);
}

std::int64_t Config::integer(const std::string& key, std::int64_t fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  if (v->size() != 1) throw ConfigError("'" + key + "' takes a single value");
  const std::string& s = v->front();
  std::int64_t out = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ConfigError("'" + key + "': '" + s + "' is not an integer");
  return out;
}

std::uint64_t Config::count(const std::string& key, std::uint64_t fallback) const {
  if (!find(key)) return fallback;
  const std::int64_t v = integer(key, 0);
  if (v < 0) throw ConfigError("'" + key + "' must be >= 0");
  return static_cast<std::uint64_t>(v);
}

bool Config::flag(const std::string& key, bool fallback) const {
  const std::string s = text(key, fallback ? "true" : "false");
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("'" + key + "': '" + s + "' is not a boolean");
}

std::vector<double> Config::numbers(const std::string& key, const std::vector<double>& fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  std::vector<double> out;
  for (const auto& s : *v) out.push_back(parse_double(key, s));
  return out;
}

std::string Config::canonical() const {
  std::string s;
  for (const auto& [key, words] : values_) {
    if (key == "out" || key == "threads") continue;
    s += key + " =";
    for (const auto& w : words) s += " " + w;
    s += '\n';
  }
  return s;
}

std::uint64_t Config::hash() const { return fnv1a(canonical()); }

std::string hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Globals read_globals(const Config& cfg) {
  if (!cfg.has("schema_version")) throw ConfigError("config lacks schema_version");
  const std::int64_t version = cfg.integer("schema_version", 0);
  if (version != kSchemaVersion)
    throw ConfigError("unsupported schema_version " + std::to_string(version) + " (expected " +
                      std::to_string(kSchemaVersion) + ")");
  Globals g;
  g.out = cfg.text("out", g.out.string());
  g.seed = cfg.count("seed", 0);
  const std::int64_t threads = cfg.integer("threads", 1);
  if (threads < 1 || threads > 1024) throw ConfigError("threads must lie in [1, 1024]");
  g.threads = static_cast<unsigned>(threads);
  // environment variables win over the file
  g.budget = env::ResourceBudget::from_environment();
  if (!std::getenv("PAMLAB_MAX_EVENTS")) g.budget.max_events = cfg.count("max_events", g.budget.max_events);
  if (!std::getenv("PAMLAB_MAX_SITES")) g.budget.max_sites = cfg.count("max_sites", g.budget.max_sites);
  if (g.budget.max_events == 0 || g.budget.max_sites == 0) throw ConfigError("budgets must be positive");
  g.config_hash = cfg.hash();
  return g;
}

}  // namespace pamlab::cli
