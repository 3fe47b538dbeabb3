#include "simopt/opt/run.hpp"

#include <algorithm>
#include <ostream>

namespace simopt::opt {

Budget::Budget(long max_evaluations) : max_(max_evaluations) {
  if (max_evaluations < 1) throw DomainError("budget: max_evaluations must be positive");
}

void Budget::consume(long r) {
  if (r < 0) throw DomainError("budget: negative consumption");
  if (r > remaining()) {
    throw BudgetExhausted("budget: " + std::to_string(r) + " replications requested, " + std::to_string(remaining()) +
                          " left");
  }
  consumed_ += r;
}

long OptimizationTrace::total_reps() const {
  long total = 0;
  for (const auto& r : records) total += r.reps;
  return total;
}

namespace {

void write_point(std::ostream& out, const Point& x, Eigen::Index d, char sep) {
  for (Eigen::Index j = 0; j < d; ++j) {
    out << sep << (j < x.size() ? format_double(x[j]) : std::string("nan"));
  }
}

}  // namespace

void OptimizationTrace::write_csv(std::ostream& out, bool with_time, char sep) const {
  out << "iter";
  for (Eigen::Index j = 1; j <= dim; ++j) out << sep << "x_" << j;
  out << sep << "reps";
  for (Eigen::Index j = 1; j <= dim; ++j) out << sep << "incumbent_" << j;
  out << sep << "incumbent_est" << sep << "criterion";
  if (with_time) out << sep << "elapsed_ms";
  out << '\n';
  for (const auto& r : records) {
    out << r.iter;
    write_point(out, r.x, dim, sep);
    out << sep << r.reps;
    write_point(out, r.incumbent, dim, sep);
    out << sep << format_double(r.incumbent_est) << sep << format_double(r.criterion);
    if (with_time) out << sep << format_double(r.elapsed_ms);
    out << '\n';
  }
}

RunContext::RunContext(const sim::SimulationModel& model, long budget, std::uint64_t seed, std::string algorithm)
    : model_(&model),
      budget_(budget),
      sim_rng_(seed, 1),
      algo_rng_(seed, 2),
      start_(std::chrono::steady_clock::now()) {
  trace_.algorithm = std::move(algorithm);
  trace_.model = model.id();
  trace_.dim = model.dim();
  trace_.budget = budget;
}

Engine RunContext::engine(std::uint64_t purpose) { return algo_rng_.child(purpose).next_engine(); }

sim::ReplicationSet RunContext::sample(const Point& x, int r, long iter, double criterion) {
  if (r < 1) throw DomainError("sample: need at least one replication");
  if (!box().contains(x, 1e-12)) throw FeasibilityError("sample: point outside the box");
  if (!trace_.records.empty() && iter < trace_.records.back().iter) {
    throw DomainError("sample: iteration index went backwards");
  }
  budget_.consume(r);
  auto stream = sim_rng_.child(calls_++);
  auto reps = sim::run_replications(*model_, x, r, stream);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  trace_.records.push_back({iter, x, r, incumbent_, incumbent_est_, criterion, ms});
  trace_.consumed = budget_.consumed();
  return reps;
}

void RunContext::set_incumbent(const Point& x, double estimate) {
  incumbent_ = x;
  incumbent_est_ = estimate;
}

OptimizationTrace RunContext::finish(const Point& recommendation, double estimate) {
  trace_.recommendation = recommendation;
  trace_.recommendation_est = estimate;
  trace_.consumed = budget_.consumed();
  return trace_;
}

void check_config_keys(const KvDoc& config, const std::vector<std::string>& known, const std::string& where) {
  for (const auto& [key, value] : config.entries()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
}

}  // namespace simopt::opt
