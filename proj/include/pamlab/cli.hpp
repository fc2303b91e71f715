#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "pamlab/environment.hpp"

namespace pamlab::cli {

enum class Exit : int {
  ok = 0,
  failure = 1,  // usage errors and internal faults
  config = 2,
  resource = 3,
  numeric = 4,
  violation = 5,  // a verified inequality or property failed
};

inline constexpr int kSchemaVersion = 1;

/// Flat view of an INI file. Top-level keys keep their name, keys under
/// [section] become "section.key"; values are whitespace-separated lists.
class Config {
 public:
  static Config parse(std::istream& in);
  /// Raises ConfigError when the file is missing or malformed.
  static Config load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string text(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key, double fallback) const;
  std::int64_t integer(const std::string& key, std::int64_t fallback) const;
  std::uint64_t count(const std::string& key, std::uint64_t fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) const;

  /// Sorted `key = values` lines, leaving out `out` and `threads` since they
  /// do not change any result.
  std::string canonical() const;
  std::uint64_t hash() const;

 private:
  const std::vector<std::string>* find(const std::string& key) const;
  std::map<std::string, std::vector<std::string>> values_;
};

struct Globals {
  std::filesystem::path out = "pamlab-out";
  std::uint64_t seed = 0;
  unsigned threads = 1;
  env::ResourceBudget budget;
  std::uint64_t config_hash = 0;
};

/// Checks the schema version and budgets, and reads the global block.
Globals read_globals(const Config& cfg);

struct Outcome {
  Exit code = Exit::ok;
  std::vector<std::filesystem::path> artifacts;
  std::vector<std::string> summary;  // one line per finding
};

const std::vector<std::string>& subcommands();

/// Runs one subcommand and writes its artifacts under g.out.
Outcome run_subcommand(const std::string& name, const Config& cfg, const Globals& g);

/// pamlab <subcommand> --config FILE [--seed N] [--threads N] [--out DIR]
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

std::string hex(std::uint64_t h);

}  // namespace pamlab::cli
