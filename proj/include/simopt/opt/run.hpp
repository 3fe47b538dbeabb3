#pragma once

#include "simopt/kv.hpp"
#include "simopt/sim/replication.hpp"

#include <chrono>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace simopt::opt {

/// Replication budget. Every replication costs exactly one unit.
class Budget {
 public:
  explicit Budget(long max_evaluations);

  [[nodiscard]] long max() const { return max_; }
  [[nodiscard]] long consumed() const { return consumed_; }
  [[nodiscard]] long remaining() const { return max_ - consumed_; }
  [[nodiscard]] bool exhausted() const { return consumed_ >= max_; }

  /// Throws BudgetExhausted, leaving the counter unchanged, if r exceeds what is left.
  void consume(long r);

 private:
  long max_;
  long consumed_ = 0;
};

struct TraceRecord {
  long iter = 0;
  Point x;
  int reps = 0;
  Point incumbent;
  double incumbent_est = std::numeric_limits<double>::quiet_NaN();
  double criterion = std::numeric_limits<double>::quiet_NaN();
  double elapsed_ms = 0.0;
};

struct OptimizationTrace {
  std::string algorithm;
  std::string model;
  Eigen::Index dim = 0;
  long budget = 0;
  long consumed = 0;
  std::vector<TraceRecord> records;

  Point recommendation;
  double recommendation_est = std::numeric_limits<double>::quiet_NaN();
  bool truncated = false;  ///< stopped early because the next step did not fit in the budget
  bool converged = false;  ///< stopped early by the algorithm's own termination rule

  [[nodiscard]] long total_reps() const;

  /// Header `iter,x_1..x_d,reps,incumbent_1..incumbent_d,incumbent_est,criterion,elapsed_ms`.
  void write_csv(std::ostream& out, bool with_time = true, char sep = ',') const;
};

/// Simulation access for one optimizer run: budget accounting, per-call random
/// streams and the trace. Each call to sample() draws from its own substream, so
/// a run is a pure function of (model, seed, decisions).
class RunContext {
 public:
  RunContext(const sim::SimulationModel& model, long budget, std::uint64_t seed, std::string algorithm);

  [[nodiscard]] const sim::SimulationModel& model() const { return *model_; }
  [[nodiscard]] const Budget& budget() const { return budget_; }
  [[nodiscard]] const Box& box() const { return model_->box(); }
  [[nodiscard]] Eigen::Index dim() const { return model_->dim(); }

  /// Engine for algorithm-internal randomness (designs, candidate grids, samplers).
  [[nodiscard]] Engine engine(std::uint64_t purpose);

  /// Runs r replications at x and appends a trace record for them.
  sim::ReplicationSet sample(const Point& x, int r, long iter, double criterion = std::numeric_limits<double>::quiet_NaN());

  void set_incumbent(const Point& x, double estimate);
  [[nodiscard]] const Point& incumbent() const { return incumbent_; }

  /// Closes the trace with the final recommendation.
  [[nodiscard]] OptimizationTrace finish(const Point& recommendation, double estimate);
  OptimizationTrace& trace() { return trace_; }

 private:
  const sim::SimulationModel* model_;
  Budget budget_;
  RngStream sim_rng_;
  RngStream algo_rng_;
  std::uint64_t calls_ = 0;
  std::chrono::steady_clock::time_point start_;
  Point incumbent_;
  double incumbent_est_ = std::numeric_limits<double>::quiet_NaN();
  OptimizationTrace trace_;
};

/// Reads `key` from a config document, rejecting keys that are not in `known`.
void check_config_keys(const KvDoc& config, const std::vector<std::string>& known, const std::string& where);

}  // namespace simopt::opt
