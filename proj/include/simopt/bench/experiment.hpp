#pragma once

#include "simopt/opt/run.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace simopt::bench {

/// One experiment battery: every (algorithm, seed) cell on one model.
///
///     model = multimodal1d
///     algorithms = ucb,kg
///     budget = 200
///     seeds = 1,2,3
///     [model_params]
///     noise_sd = 0.1
///     [prior]
///     kernel = matern
///     [algorithm.ucb]
///     ucb_a = 2
struct ExperimentSpec {
  std::string model;
  KvDoc model_params;
  std::vector<std::string> algorithms;
  std::map<std::string, KvDoc> algorithm_config;
  KvDoc prior;  ///< kernel settings shared by the GP-based algorithms
  long budget = 0;
  std::vector<std::uint64_t> seeds;
  double gap_threshold = 0.05;  ///< optimality gap that counts as reached in budget_to_threshold
  std::string out = "out";
  int workers = 1;

  /// Throws ConfigError naming the offending key.
  [[nodiscard]] static ExperimentSpec from_kv(const KvDoc& doc);
  [[nodiscard]] KvDoc to_kv() const;
  /// FNV-1a of the canonical serialization, without `out` and `workers`.
  [[nodiscard]] std::string hash() const;
  /// Ids resolve, seeds are nonempty and distinct, budget is positive.
  void validate() const;
  /// Algorithm config with the prior section folded in where it applies.
  [[nodiscard]] KvDoc config_for(const std::string& algorithm) const;
};

struct CellResult {
  std::string algorithm;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  opt::OptimizationTrace trace;
  std::optional<double> true_value;
  std::optional<double> gap;
  std::optional<long> budget_to_threshold;
};

struct ResultBundle {
  std::string hash;
  std::string directory;
  Eigen::Index dim = 0;
  std::vector<CellResult> cells;  ///< algorithm-major, then seeds in spec order

  [[nodiscard]] bool all_ok() const;
  /// algorithm,seed,status,budget,consumed,truncated,converged,rec_1..rec_d,rec_est,true_value,gap,budget_to_threshold,error
  void write_summary(std::ostream& out, char sep = ',') const;
  /// Per algorithm: cells, failed, truncated, gap_mean, gap_std, reached, budget_to_threshold_mean.
  void write_aggregate(std::ostream& out, char sep = ',') const;
};

/// Runs every cell (up to `workers` at a time) and writes
/// <out>/<hash>/{spec, traces/seed-<seed>-<algorithm>.csv, summary.csv, aggregate.csv}.
/// Failed cells are reported in the bundle; completed cells keep their files.
[[nodiscard]] ResultBundle run_experiment(const ExperimentSpec& spec);

}  // namespace simopt::bench
