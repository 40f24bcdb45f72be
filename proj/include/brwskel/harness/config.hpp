#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "brwskel/core/error.hpp"
#include "brwskel/treegen/gen_tree.hpp"
#include "brwskel/treegen/offspring_law.hpp"

namespace brwskel::harness {

inline const std::vector<std::string> kExperiments = {"survival",         "pair-mrca",       "lifetime",
                                                      "skeleton-density", "branch-boundary", "shapes",
                                                      "enumerate-lattice", "gst-check"};

/// Everything that determines a run. Defaults depend on the experiment; see
/// defaults_for().
struct ExperimentConfig {
  std::string experiment = "survival";
  treegen::OffspringLaw law = treegen::kGeometricHalf;
  int d = 1;
  int L = 1;
  std::vector<std::int64_t> n_grid{100};
  double s = 1.0;                           // conditioning horizon: T_{floor(ns)} != empty
  std::vector<int> k_grid{1};               // K values (K-max is the largest)
  std::vector<double> delta_grid{0.1};
  std::vector<double> epsilon_grid{0.25};
  std::vector<double> t_grid{2.0};
  double u1 = 1.0, u2 = 1.0;                // rescaled generations of a pair
  int k1 = 3, k2 = 3;                       // exact generations for the per-m pair check
  double window_a = 0.2, window_b = 0.6;    // rescaled MRCA window [a, b)
  std::uint64_t replicas = 1000;
  std::uint64_t direct_replicas = 0;        // pair-mrca full-tree cross-check
  std::uint64_t seed = 1;
  std::string out = "out";
  int threads = 1;
  std::string format = "json";              // json | csv
  bool plots = false;
  std::uint64_t cap = treegen::kDefaultVertexCap;
  std::uint32_t max_generation = 2'000'000;  // lifetime: population-profile horizon
  std::string on_budget = "redraw";         // redraw | fail
  double min_acceptance = 0.0;
  int max_edges = 2;
  std::string z = "1";                      // lattice fugacity, integer or p/q

  int k_max() const {
    int m = 0;
    for (int k : k_grid) m = std::max(m, k);
    return m;
  }
};

inline ExperimentConfig defaults_for(const std::string& experiment) {
  ExperimentConfig c;
  c.experiment = experiment;
  if (experiment == "survival") {
    c.n_grid = {10, 50, 100, 200};
    c.replicas = 1'000'000;
  } else if (experiment == "pair-mrca") {
    c.n_grid = {200};
    c.replicas = 1'000'000;
    c.direct_replicas = 100'000;
  } else if (experiment == "lifetime") {
    c.n_grid = {200};
    c.t_grid = {1.5, 2.0, 3.0};
    c.replicas = 20'000;
  } else if (experiment == "skeleton-density") {
    c.n_grid = {100};
    c.k_grid = {1, 2, 4, 8, 16, 32, 64};
    c.epsilon_grid = {0.25, 0.5, 1.0};
    c.replicas = 1000;
    c.cap = 4'000'000;
  } else if (experiment == "branch-boundary") {
    c.n_grid = {50, 200};
    c.delta_grid = {0.05, 0.1, 0.2};
    c.epsilon_grid = {0.1, 0.25, 0.5};
    c.u1 = 0.5;
    c.u2 = 1.0;
    c.replicas = 4000;
  } else if (experiment == "shapes") {
    c.n_grid = {50, 200};
    c.k_grid = {2, 3, 4};
    c.replicas = 2000;
    c.cap = 4'000'000;
  } else if (experiment == "enumerate-lattice") {
    c.max_edges = 2;
    c.replicas = 100'000;
  } else if (experiment == "gst-check") {
    c.n_grid = {1, 2, 7, 100};
    c.k_grid = {2, 3, 4, 5, 6};
    c.replicas = 1000;
  } else {
    throw ConfigError("unknown experiment '" + experiment + "'");
  }
  return c;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  std::istringstream is(text);
  T v{};
  if (!(is >> v) || !(is >> std::ws).eof()) throw ConfigError("bad value for '" + key + "': '" + text + "'");
  if constexpr (std::is_unsigned_v<T>) {
    if (text.find('-') != std::string::npos) throw ConfigError("'" + key + "' must be non-negative");
  }
  return v;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) out.push_back(parse_number<T>(key, trim(item)));
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("bad value for '" + key + "': '" + text + "'");
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

}  // namespace detail

/// Applies one key/value pair. Keys mirror the field names; lists are
/// comma separated.
inline void set_option(ExperimentConfig& c, const std::string& key, const std::string& raw) {
  using namespace detail;
  const std::string v = trim(raw);
  if (key == "experiment") {
    if (v != c.experiment) throw ConfigError("experiment is fixed by the subcommand ('" + c.experiment + "')");
  } else if (key == "law") c.law = treegen::OffspringLaw::parse(v);
  else if (key == "d") c.d = parse_number<int>(key, v);
  else if (key == "L") c.L = parse_number<int>(key, v);
  else if (key == "n") c.n_grid = parse_list<std::int64_t>(key, v);
  else if (key == "s") c.s = parse_number<double>(key, v);
  else if (key == "K") c.k_grid = parse_list<int>(key, v);
  else if (key == "delta") c.delta_grid = parse_list<double>(key, v);
  else if (key == "epsilon") c.epsilon_grid = parse_list<double>(key, v);
  else if (key == "t") c.t_grid = parse_list<double>(key, v);
  else if (key == "u1") c.u1 = parse_number<double>(key, v);
  else if (key == "u2") c.u2 = parse_number<double>(key, v);
  else if (key == "k1") c.k1 = parse_number<int>(key, v);
  else if (key == "k2") c.k2 = parse_number<int>(key, v);
  else if (key == "window_a") c.window_a = parse_number<double>(key, v);
  else if (key == "window_b") c.window_b = parse_number<double>(key, v);
  else if (key == "replicas") c.replicas = parse_number<std::uint64_t>(key, v);
  else if (key == "direct_replicas") c.direct_replicas = parse_number<std::uint64_t>(key, v);
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, v);
  else if (key == "out") c.out = v;
  else if (key == "threads") c.threads = parse_number<int>(key, v);
  else if (key == "format") c.format = v;
  else if (key == "plots") c.plots = parse_bool(key, v);
  else if (key == "cap") c.cap = parse_number<std::uint64_t>(key, v);
  else if (key == "max_generation") c.max_generation = parse_number<std::uint32_t>(key, v);
  else if (key == "on_budget") c.on_budget = v;
  else if (key == "min_acceptance") c.min_acceptance = parse_number<double>(key, v);
  else if (key == "max_edges") c.max_edges = parse_number<int>(key, v);
  else if (key == "z") c.z = v;
  else throw ConfigError("unknown key '" + key + "'");
}

/// Flat `key = value` text; `#` starts a comment.
inline void apply_config_text(ExperimentConfig& c, std::istream& is, const std::string& origin = "config") {
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    }
    try {
      set_option(c, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

inline void apply_config_file(ExperimentConfig& c, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file '" + path + "'");
  apply_config_text(c, is, path);
}

inline void validate(const ExperimentConfig& c) {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (c.n_grid.empty() || c.k_grid.empty() || c.delta_grid.empty() || c.epsilon_grid.empty() || c.t_grid.empty()) {
    fail("grids must be non-empty");
  }
  if (c.replicas == 0) fail("replicas must be positive");
  if (c.threads < 1) fail("threads must be >= 1");
  if (c.d < 1 || c.L < 1) fail("d and L must be >= 1");
  if (c.d > 8) fail("d must be <= 8");
  for (auto n : c.n_grid)
    if (n < 0) fail("n must be >= 0");
  for (int k : c.k_grid)
    if (k < 1) fail("K must be >= 1");
  for (double x : c.delta_grid)
    if (!(x > 0)) fail("delta must be positive");
  for (double x : c.epsilon_grid)
    if (!(x > 0)) fail("epsilon must be positive");
  if (!(c.s > 0)) fail("s must be positive");
  if (!(c.u1 > 0) || !(c.u2 > 0)) fail("u1 and u2 must be positive");
  if (c.format != "json" && c.format != "csv") fail("format must be json or csv");
  if (c.on_budget != "redraw" && c.on_budget != "fail") fail("on_budget must be redraw or fail");
  if (c.cap < 1) fail("cap must be >= 1");
  if (c.min_acceptance < 0 || c.min_acceptance > 1) fail("min_acceptance must lie in [0,1]");
  if (c.experiment == "pair-mrca") {
    if (c.k1 < 1 || c.k2 < 1) fail("k1 and k2 must be >= 1");
    if (!(c.window_a >= 0) || !(c.window_b > c.window_a)) fail("need 0 <= window_a < window_b");
    if (c.window_b > std::min(c.u1, c.u2) + 1e-12) fail("window_b must not exceed u1 ^ u2");
  }
  if (c.experiment == "lifetime" && c.s != 1.0) fail("lifetime needs s = 1");
  if (c.experiment == "shapes") {
    for (int k : c.k_grid)
      if (k < 2 || k > 4) fail("shapes needs K in {2,3,4}");
  }
  if (c.experiment == "enumerate-lattice" && (c.max_edges < 0 || c.max_edges > 12)) fail("max_edges must lie in [0,12]");
  if (c.experiment == "gst-check") {
    for (auto n : c.n_grid)
      if (n < 1) fail("gst-check needs n >= 1");
    for (int k : c.k_grid)
      if (k < 2) fail("gst-check needs K >= 2");
  }
}

/// Key/value form of the config, the same keys as the config file.
inline std::map<std::string, std::string> to_pairs(const ExperimentConfig& c) {
  using detail::join;
  auto num = [](auto x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
  };
  return {{"experiment", c.experiment},
          {"law", c.law.name()},
          {"d", num(c.d)},
          {"L", num(c.L)},
          {"n", join(c.n_grid)},
          {"s", num(c.s)},
          {"K", join(c.k_grid)},
          {"delta", join(c.delta_grid)},
          {"epsilon", join(c.epsilon_grid)},
          {"t", join(c.t_grid)},
          {"u1", num(c.u1)},
          {"u2", num(c.u2)},
          {"k1", num(c.k1)},
          {"k2", num(c.k2)},
          {"window_a", num(c.window_a)},
          {"window_b", num(c.window_b)},
          {"replicas", num(c.replicas)},
          {"direct_replicas", num(c.direct_replicas)},
          {"seed", num(c.seed)},
          {"out", c.out},
          {"threads", num(c.threads)},
          {"format", c.format},
          {"plots", c.plots ? "true" : "false"},
          {"cap", num(c.cap)},
          {"max_generation", num(c.max_generation)},
          {"on_budget", c.on_budget},
          {"min_acceptance", num(c.min_acceptance)},
          {"max_edges", num(c.max_edges)},
          {"z", c.z}};
}

inline ExperimentConfig from_pairs(const std::map<std::string, std::string>& kv) {
  auto it = kv.find("experiment");
  if (it == kv.end()) throw ConfigError("config echo lacks 'experiment'");
  ExperimentConfig c = defaults_for(it->second);
  for (const auto& [k, v] : kv) set_option(c, k, v);
  return c;
}

}  // namespace brwskel::harness
