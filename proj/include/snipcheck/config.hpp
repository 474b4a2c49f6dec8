#pragma once

#include "snipcheck/errors.hpp"
#include "snipcheck/strings.hpp"

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace snipcheck {

// Flat TOML-style key/value file: `key = value`, `#` comments, optional
// double quotes around values. Order is preserved (the compiler catalog's
// order is its trial order).
inline std::vector<std::pair<std::string, std::string>> parse_kv(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> entries;
  for (auto raw : split_lines(text)) {
    auto line = trim_view(raw);
    if (line.empty() || line[0] == '#') continue;
    size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line without '=': " + std::string(line));
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    size_t hash = value.find(" #");
    if (!value.empty() && value[0] != '"' && hash != std::string::npos)
      value = trim(value.substr(0, hash));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    if (key.empty()) throw ConfigError("config line with empty key");
    entries.emplace_back(std::move(key), std::move(value));
  }
  return entries;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<std::pair<std::string, std::string>> parse_kv_file(const std::string& path) {
  return parse_kv(read_file(path));
}

// Exploration bounds for symbolic execution.
struct ExploreLimits {
  int max_depth = 512;                 // blocks per path
  int loop_bound = 3;                  // back-edge traversals per path
  int64_t per_contract_timeout_ms = 300'000;
  int64_t solver_budget_ms = 5'000;    // per query
  int max_paths = 2048;
  int max_jump_solutions = 8;          // symbolic JUMP target enumeration
};

struct RunConfig {
  std::string backend = "scaffold";    // "scaffold" or "http:<url>"
  int max_rounds = 13;
  std::string catalog_path;            // compiler catalog file
  std::string solver_cmd;              // solver executable; empty = $SNIPCHECK_SOLVER
  ExploreLimits limits;
  bool prune = true;
  std::string format = "json";         // "json" or "markdown"
  std::string output_path;             // empty = stdout
  size_t prompt_budget = 8000;
  size_t min_snippet_lines = 2;        // one-liner filter threshold
  int jobs = 1;
  bool dump_cfg = false;

  void validate() const {
    if (max_rounds < 1) throw ConfigError("max_rounds must be >= 1");
    if (limits.max_depth <= 0 || limits.loop_bound <= 0 || limits.per_contract_timeout_ms <= 0 ||
        limits.solver_budget_ms <= 0 || limits.max_paths <= 0)
      throw ConfigError("limits must be positive");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    if (format != "json" && format != "markdown") throw ConfigError("unknown format: " + format);
    if (backend != "scaffold" && !starts_with(backend, "http:"))
      throw ConfigError("unknown backend: " + backend);
  }

  // Applies `key = value` pairs from a config file; flags override afterwards.
  void apply(const std::vector<std::pair<std::string, std::string>>& entries) {
    for (auto& [key, value] : entries) {
      if (key == "backend") backend = value;
      else if (key == "max_rounds") max_rounds = std::stoi(value);
      else if (key == "catalog") catalog_path = value;
      else if (key == "solver") solver_cmd = value;
      else if (key == "max_depth") limits.max_depth = std::stoi(value);
      else if (key == "loop_bound") limits.loop_bound = std::stoi(value);
      else if (key == "contract_timeout_ms") limits.per_contract_timeout_ms = std::stoll(value);
      else if (key == "solver_budget_ms") limits.solver_budget_ms = std::stoll(value);
      else if (key == "max_paths") limits.max_paths = std::stoi(value);
      else if (key == "prune") prune = (value == "true" || value == "1");
      else if (key == "format") format = value;
      else if (key == "output") output_path = value;
      else if (key == "prompt_budget") prompt_budget = std::stoul(value);
      else if (key == "min_snippet_lines") min_snippet_lines = std::stoul(value);
      else if (key == "jobs") jobs = std::stoi(value);
      else throw ConfigError("unknown config key: " + key);
    }
  }
};

}  // namespace snipcheck
