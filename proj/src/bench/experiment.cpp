#include "simopt/bench/experiment.hpp"

#include "simopt/opt/registry.hpp"
#include "simopt/sim/testbed.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

namespace simopt::bench {

namespace fs = std::filesystem;

namespace {

bool is_global(const std::string& id) { return id == "kg" || id == "kg_saa" || id == "ucb" || id == "gps"; }

std::string join(const std::vector<std::string>& items) {
  std::string s;
  for (std::size_t i = 0; i < items.size(); ++i) s += (i ? "," : "") + items[i];
  return s;
}

std::string opt_double(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

ExperimentSpec ExperimentSpec::from_kv(const KvDoc& doc) {
  static const std::set<std::string> top{"model", "algorithms", "budget", "seeds", "gap_threshold", "out", "workers"};
  for (const auto& [key, value] : doc.entries()) {
    const auto dot = key.find('.');
    if (dot == std::string::npos) {
      if (!top.count(key)) throw ConfigError("experiment: unknown key '" + key + "'");
      continue;
    }
    const auto section = key.substr(0, dot);
    if (section != "model_params" && section != "prior" && section != "algorithm") {
      throw ConfigError("experiment: unknown key '" + key + "'");
    }
  }
  ExperimentSpec s;
  if (!doc.has("model")) throw ConfigError("experiment: missing key 'model'");
  if (!doc.has("algorithms")) throw ConfigError("experiment: missing key 'algorithms'");
  if (!doc.has("budget")) throw ConfigError("experiment: missing key 'budget'");
  if (!doc.has("seeds")) throw ConfigError("experiment: missing key 'seeds'");
  s.model = doc.at("model");
  s.model_params = doc.subtree("model_params");
  s.algorithms = doc.get_list("algorithms");
  s.prior = doc.subtree("prior");
  s.budget = static_cast<long>(doc.get_int("budget"));
  for (const auto& t : doc.get_list("seeds")) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
      s.seeds.push_back(v);
    } catch (const std::logic_error&) {
      throw ConfigError("experiment: key 'seeds' has a non-integer entry '" + t + "'");
    }
  }
  s.gap_threshold = doc.get_double("gap_threshold", s.gap_threshold);
  s.out = doc.get_string("out", s.out);
  s.workers = static_cast<int>(doc.get_int("workers", s.workers));
  const auto algo = doc.subtree("algorithm");
  for (const auto& [key, value] : algo.entries()) {
    const auto dot = key.find('.');
    const auto id = key.substr(0, dot);
    if (std::find(s.algorithms.begin(), s.algorithms.end(), id) == s.algorithms.end()) {
      throw ConfigError("experiment: key 'algorithm." + key + "' configures an algorithm not listed in 'algorithms'");
    }
    if (dot == std::string::npos) throw ConfigError("experiment: key 'algorithm." + key + "' needs a parameter name");
    s.algorithm_config[id].set(key.substr(dot + 1), value);
  }
  s.validate();
  return s;
}

KvDoc ExperimentSpec::to_kv() const {
  KvDoc d;
  d.set("model", model);
  d.merge("model_params", model_params);
  d.set("algorithms", join(algorithms));
  d.merge("prior", prior);
  for (const auto& [id, cfg] : algorithm_config) d.merge("algorithm." + id, cfg);
  d.set("budget", static_cast<long long>(budget));
  std::vector<std::string> s;
  for (auto v : seeds) s.push_back(std::to_string(v));
  d.set("seeds", join(s));
  d.set("gap_threshold", gap_threshold);
  d.set("out", out);
  d.set("workers", workers);
  return d;
}

std::string ExperimentSpec::hash() const {
  auto d = to_kv();
  d.erase("out");
  d.erase("workers");
  return fnv1a_hex(d.serialize());
}

void ExperimentSpec::validate() const {
  const auto models = sim::model_ids();
  if (std::find(models.begin(), models.end(), model) == models.end()) {
    throw ConfigError("experiment: key 'model' names unknown model '" + model + "'");
  }
  if (algorithms.empty()) throw ConfigError("experiment: key 'algorithms' is empty");
  const auto& known = opt::algorithm_ids();
  for (const auto& a : algorithms) {
    if (std::find(known.begin(), known.end(), a) == known.end()) {
      throw ConfigError("experiment: key 'algorithms' names unknown algorithm '" + a + "'");
    }
  }
  if (std::set<std::string>(algorithms.begin(), algorithms.end()).size() != algorithms.size()) {
    throw ConfigError("experiment: key 'algorithms' repeats an id");
  }
  if (seeds.empty()) throw ConfigError("experiment: key 'seeds' is empty");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw ConfigError("experiment: key 'seeds' repeats a seed");
  }
  if (budget < 1) throw ConfigError("experiment: key 'budget' must be positive");
  if (workers < 1) throw ConfigError("experiment: key 'workers' must be positive");
  for (const auto& [key, value] : prior.entries()) {
    if (key != "kernel" && key != "two_nu") throw ConfigError("experiment: unknown key 'prior." + key + "'");
  }
  for (const auto& a : algorithms) {
    try {
      opt::check_algorithm_config(a, config_for(a));
    } catch (const ConfigError& e) {
      throw ConfigError("experiment: section 'algorithm." + a + "': " + e.what());
    }
  }
}

KvDoc ExperimentSpec::config_for(const std::string& algorithm) const {
  KvDoc cfg;
  if (is_global(algorithm)) {
    for (const auto& [key, value] : prior.entries()) cfg.set(key, value);
  }
  if (auto it = algorithm_config.find(algorithm); it != algorithm_config.end()) {
    for (const auto& [key, value] : it->second.entries()) cfg.set(key, value);
  }
  return cfg;
}

bool ResultBundle::all_ok() const {
  return std::all_of(cells.begin(), cells.end(), [](const CellResult& c) { return c.ok; });
}

void ResultBundle::write_summary(std::ostream& out, char sep) const {
  out << "algorithm" << sep << "seed" << sep << "status" << sep << "budget" << sep << "consumed" << sep << "truncated"
      << sep << "converged";
  for (Eigen::Index j = 1; j <= dim; ++j) out << sep << "rec_" << j;
  out << sep << "rec_est" << sep << "true_value" << sep << "gap" << sep << "budget_to_threshold" << sep << "error\n";
  for (const auto& c : cells) {
    const auto& t = c.trace;
    out << c.algorithm << sep << c.seed << sep << (c.ok ? "ok" : "failed") << sep << t.budget << sep << t.consumed
        << sep << (t.truncated ? 1 : 0) << sep << (t.converged ? 1 : 0);
    for (Eigen::Index j = 0; j < dim; ++j) {
      out << sep << (c.ok && j < t.recommendation.size() ? format_double(t.recommendation[j]) : std::string());
    }
    out << sep << (c.ok ? format_double(t.recommendation_est) : std::string()) << sep << opt_double(c.true_value)
        << sep << opt_double(c.gap) << sep << (c.budget_to_threshold ? std::to_string(*c.budget_to_threshold) : "")
        << sep;
    std::string err = c.error;
    std::replace(err.begin(), err.end(), sep, ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out << err << '\n';
  }
}

void ResultBundle::write_aggregate(std::ostream& out, char sep) const {
  out << "algorithm" << sep << "cells" << sep << "failed" << sep << "truncated" << sep << "gap_mean" << sep
      << "gap_std" << sep << "reached" << sep << "budget_to_threshold_mean\n";
  std::vector<std::string> order;
  for (const auto& c : cells) {
    if (std::find(order.begin(), order.end(), c.algorithm) == order.end()) order.push_back(c.algorithm);
  }
  for (const auto& a : order) {
    long total = 0, failed = 0, truncated = 0, reached = 0;
    std::vector<double> gaps;
    double btt = 0.0;
    for (const auto& c : cells) {
      if (c.algorithm != a) continue;
      ++total;
      if (!c.ok) {
        ++failed;
        continue;
      }
      if (c.trace.truncated) ++truncated;
      if (c.gap) gaps.push_back(*c.gap);
      if (c.budget_to_threshold) {
        ++reached;
        btt += static_cast<double>(*c.budget_to_threshold);
      }
    }
    std::optional<double> mean, sd;
    if (!gaps.empty()) {
      double m = 0.0;
      for (double g : gaps) m += g;
      m /= static_cast<double>(gaps.size());
      double v = 0.0;
      for (double g : gaps) v += (g - m) * (g - m);
      mean = m;
      sd = gaps.size() > 1 ? std::sqrt(v / static_cast<double>(gaps.size() - 1)) : 0.0;
    }
    std::string btt_mean;
    if (reached) btt_mean = format_double(btt / static_cast<double>(reached));
    out << a << sep << total << sep << failed << sep << truncated << sep << opt_double(mean) << sep << opt_double(sd)
        << sep << (gaps.empty() ? std::string() : std::to_string(reached)) << sep << btt_mean << '\n';
  }
}

namespace {

void score_cell(CellResult& cell, const sim::SimulationModel& model, double threshold) {
  const auto fmax = model.known_max();
  const auto value = model.true_mean(cell.trace.recommendation);
  if (!fmax || !value) return;
  cell.true_value = *value;
  cell.gap = *fmax - *value;
  long used = 0;
  for (const auto& r : cell.trace.records) {
    used += r.reps;
    if (r.incumbent.size() == 0) continue;
    const auto v = model.true_mean(r.incumbent);
    if (v && *fmax - *v <= threshold) {
      cell.budget_to_threshold = used;
      return;
    }
  }
  if (*cell.gap <= threshold) cell.budget_to_threshold = cell.trace.consumed;
}

}  // namespace

ResultBundle run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const auto model = sim::make_model(spec.model, spec.model_params);
  ResultBundle bundle;
  bundle.hash = spec.hash();
  bundle.dim = model->dim();
  const fs::path dir = fs::path(spec.out) / bundle.hash;
  bundle.directory = dir.string();
  fs::create_directories(dir / "traces");
  {
    auto canonical = spec.to_kv();
    canonical.erase("out");
    canonical.erase("workers");
    canonical.save((dir / "spec").string());
  }

  for (const auto& a : spec.algorithms) {
    for (const auto s : spec.seeds) {
      CellResult c;
      c.algorithm = a;
      c.seed = s;
      bundle.cells.push_back(std::move(c));
    }
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (auto i = next++; i < bundle.cells.size(); i = next++) {
      auto& cell = bundle.cells[i];
      try {
        cell.trace = opt::run_algorithm(cell.algorithm, *model, spec.config_for(cell.algorithm), spec.budget, cell.seed);
        const auto path = dir / "traces" / ("seed-" + std::to_string(cell.seed) + "-" + cell.algorithm + ".csv");
        std::ofstream f(path);
        cell.trace.write_csv(f);
        if (!f) throw Error("cannot write " + path.string());
        score_cell(cell, *model, spec.gap_threshold);
        cell.ok = true;
      } catch (const std::exception& e) {
        cell.ok = false;
        cell.error = e.what();
      }
    }
  };
  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(spec.workers), bundle.cells.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::ofstream summary(dir / "summary.csv");
  bundle.write_summary(summary);
  std::ofstream aggregate(dir / "aggregate.csv");
  bundle.write_aggregate(aggregate);
  return bundle;
}

}  // namespace simopt::bench
