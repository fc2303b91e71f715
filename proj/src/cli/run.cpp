#include <optional>
#include <ostream>

#include "CLI11.hpp"
#include "pamlab/cli.hpp"
#include "pamlab/errors.hpp"

namespace pamlab::cli {

namespace {

Exit exit_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config:
    case ErrorKind::parameter:
    case ErrorKind::range:
      return Exit::config;
    case ErrorKind::resource:
      return Exit::resource;
    case ErrorKind::numeric:
      return Exit::numeric;
    case ErrorKind::contract:
      return Exit::failure;
  }
  return Exit::failure;
}

const char* label(Exit e) {
  switch (e) {
    case Exit::ok: return "ok";
    case Exit::failure: return "failure";
    case Exit::config: return "config error";
    case Exit::resource: return "resource error";
    case Exit::numeric: return "numeric error";
    case Exit::violation: return "property violation";
  }
  return "failure";
}

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> out;
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Parabolic Anderson model experiments and inequality checks"};
  app.require_subcommand(1, 1);
  Flags flags;
  std::string chosen;
  for (const auto& name : subcommands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", flags.config, "INI experiment file");
    sub->add_option("--seed", flags.seed, "master seed (overrides the file)");
    sub->add_option("--threads", flags.threads, "worker threads (overrides the file)")->check(CLI::Range(1, 1024));
    sub->add_option("--out", flags.out, "output directory (overrides the file)");
    sub->callback([&chosen, name] { chosen = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return static_cast<int>(Exit::failure);
  }

  try {
    if (flags.config.empty()) throw ConfigError("--config is required");
    Config cfg = Config::load(flags.config);
    if (flags.seed) cfg.set("seed", std::to_string(*flags.seed));
    if (flags.threads) cfg.set("threads", std::to_string(*flags.threads));
    if (flags.out) cfg.set("out", *flags.out);
    const Globals g = read_globals(cfg);
    const Outcome o = run_subcommand(chosen, cfg, g);
    for (const auto& line : o.summary) out << chosen << ": " << line << '\n';
    for (const auto& a : o.artifacts) out << chosen << ": wrote " << a.string() << '\n';
    out << chosen << ": " << label(o.code) << " (config " << hex(g.config_hash) << ", seed " << g.seed << ")\n";
    return static_cast<int>(o.code);
  } catch (const Error& e) {
    const Exit code = exit_for(e.kind());
    err << chosen << ": " << label(code) << ": " << e.what() << '\n';
    return static_cast<int>(code);
  } catch (const std::exception& e) {
    err << chosen << ": failure: " << e.what() << '\n';
    return static_cast<int>(Exit::failure);
  }
}

}  // namespace pamlab::cli
