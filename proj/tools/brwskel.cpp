// brwskel: experiment runner. See README.md for subcommands, config keys
// and exit codes.

#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "brwskel/harness/config.hpp"
#include "brwskel/harness/experiments.hpp"
#include "brwskel/harness/record.hpp"

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kBudget = 3, kFloor = 4 };

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed, replicas;
  std::optional<int> threads;
  std::optional<std::string> out, format;
  std::vector<std::string> set;
  bool plots = false;
  bool quiet = false;
};

void print_summary(const brwskel::harness::ExperimentRecord& r, std::ostream& os) {
  for (const auto& t : r.tests) {
    os << (t.passed ? "PASS " : "FAIL ") << t.name;
    if (std::isfinite(t.p_value)) os << " p=" << t.p_value;
    os << "  (" << t.detail << ")\n";
  }
  os << "hash " << r.content_hash << "  " << r.metadata.wall_clock_seconds << " s\n";
}

}  // namespace

int main(int argc, char** argv) {
  using namespace brwskel;
  using namespace brwskel::harness;

  CLI::App app{"Branching random walk skeletons: simulation and oracle checks"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "flat key = value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--replicas", g.replicas, "replica count");
  app.add_option("--threads", g.threads, "worker threads");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--format", g.format, "json or csv");
  app.add_option("--set", g.set, "extra key=value overrides")->take_all();
  app.add_flag("--plots", g.plots, "write SVG plots");
  app.add_flag("--quiet", g.quiet, "no summary on stdout");
  app.fallthrough();
  for (const auto& name : kExperiments) app.add_subcommand(name, "run the " + name + " experiment");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  ExperimentConfig config;
  ExperimentRecord record;
  try {
    config = defaults_for(app.get_subcommands().front()->get_name());
    if (!g.config.empty()) apply_config_file(config, g.config);
    for (const auto& kv : g.set) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      set_option(config, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (g.seed) config.seed = *g.seed;
    if (g.replicas) config.replicas = *g.replicas;
    if (g.threads) config.threads = *g.threads;
    if (g.out) config.out = *g.out;
    if (g.format) config.format = *g.format;
    if (g.plots) config.plots = true;
    validate(config);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  }

  try {
    record = run_experiment(config);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const BudgetExceeded& e) {
    std::cerr << "budget exceeded: " << e.what() << "\n";
    return kBudget;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }

  try {
    const auto path = write_record(config.out, record);
    if (config.format == "csv") write_csv(config.out, record);
    if (config.plots) write_svg(config.out, record);
    if (!g.quiet) {
      std::cout << "record " << path << "\n";
      print_summary(record, std::cout);
    }
    check_acceptance_floor(record, config);
  } catch (const AcceptanceFloorBreached& e) {
    std::cerr << e.what() << "\n";
    return kFloor;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}
