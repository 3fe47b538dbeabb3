#include "simopt/bench/approx.hpp"
#include "simopt/bench/experiment.hpp"
#include "simopt/bench/selfcheck.hpp"
#include "simopt/opt/registry.hpp"
#include "simopt/sim/testbed.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> workers;
  std::vector<std::string> overrides;
};

simopt::KvDoc load_config(const std::string& path, const Globals& g) {
  auto doc = path.empty() ? simopt::KvDoc{} : simopt::KvDoc::load(path);
  for (const auto& o : g.overrides) doc.apply_override(o);
  return doc;
}

int cmd_optimize(const std::string& path, const Globals& g) {
  auto doc = load_config(path, g);
  if (g.seed) doc.set("seeds", std::to_string(*g.seed));
  if (g.out) doc.set("out", *g.out);
  if (g.workers) doc.set("workers", *g.workers);
  const auto spec = simopt::bench::ExperimentSpec::from_kv(doc);
  const auto bundle = simopt::bench::run_experiment(spec);
  bundle.write_aggregate(std::cout);
  std::cerr << "results in " << bundle.directory << '\n';
  for (const auto& c : bundle.cells) {
    if (!c.ok) std::cerr << "cell " << c.algorithm << " seed " << c.seed << " failed: " << c.error << '\n';
  }
  return bundle.all_ok() ? 0 : 1;
}

int cmd_approx(const std::string& path, const Globals& g) {
  auto doc = load_config(path, g);
  if (g.seed) doc.set("seed", static_cast<long long>(*g.seed));
  const auto table = simopt::bench::approx_compare(simopt::bench::ApproxCompareConfig::from_kv(doc));
  table.write(std::cout);
  if (g.out) {
    std::filesystem::create_directories(*g.out);
    std::ofstream f(std::filesystem::path(*g.out) / "approx.csv");
    table.write(f);
  }
  if (table.baseline_skipped) std::cerr << "exact baseline skipped: n exceeds exact_max_n\n";
  return 0;
}

int cmd_selfcheck(const Globals& g) {
  simopt::bench::CheckOptions opt;
  if (g.seed) opt.seed = *g.seed;
  const auto checks = simopt::bench::run_selfcheck(opt);
  simopt::bench::write_checks(std::cout, checks);
  for (const auto& c : checks) {
    if (!c.pass) return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation optimization toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Seed (replaces the configured seed list)");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--workers", g.workers, "Concurrent experiment cells")->check(CLI::PositiveNumber);
  app.add_option("--override", g.overrides, "key=value applied on top of the config")->take_all();

  std::string optimize_path;
  auto* optimize = app.add_subcommand("optimize", "Run every (algorithm, seed) cell of an experiment");
  optimize->add_option("config", optimize_path, "Experiment config")->required()->check(CLI::ExistingFile);

  std::string approx_path;
  auto* approx = app.add_subcommand("approx-compare", "Low-rank posterior errors and build times against the exact GP");
  approx->add_option("config", approx_path, "Comparison config (defaults apply when omitted)")->check(CLI::ExistingFile);

  auto* selfcheck = app.add_subcommand("selfcheck", "Run the identity battery");
  auto* list_models = app.add_subcommand("list-models", "Print model ids");
  auto* list_algorithms = app.add_subcommand("list-algorithms", "Print algorithm ids");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*optimize) return cmd_optimize(optimize_path, g);
    if (*approx) return cmd_approx(approx_path, g);
    if (*selfcheck) return cmd_selfcheck(g);
    if (*list_models) {
      for (const auto& id : simopt::sim::model_ids()) std::cout << id << '\n';
      return 0;
    }
    if (*list_algorithms) {
      for (const auto& id : simopt::opt::algorithm_ids()) std::cout << id << '\n';
      return 0;
    }
  } catch (const simopt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
