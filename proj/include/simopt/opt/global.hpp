#pragma once

#include "simopt/gp/posterior.hpp"
#include "simopt/opt/gps.hpp"
#include "simopt/opt/run.hpp"

namespace simopt::opt {

struct GlobalConfig {
  std::string acquisition = "ucb";  ///< kg, kg_saa, ucb or gps
  int initial_points = 0;           ///< 0: 10 d
  int reps_per_point = 5;
  int batch = 1;

  std::string kernel = "matern";  ///< matern or gaussian
  int two_nu = 5;
  int hyper_restarts = 4;
  double refit_growth = 1.25;  ///< refit hyperparameters once n reaches this multiple of the last fit's n
  /// Noise variances below this fraction of their median are raised to it.
  double noise_shrink = 0.25;
  double noise_floor = 1e-10;

  int grid_per_dim = 128;  ///< candidate LHS size per dimension, refreshed every iteration
  double ucb_a = 2.0;
  int saa_samples = 64;

  GpsSampler gps_sampler{};
  bool gps_smoothing = false;  ///< jitter grid samples with a Gaussian of one grid spacing

  bool refine_final = true;  ///< polish the final argmax of the posterior mean by pattern search

  [[nodiscard]] static GlobalConfig from_kv(const KvDoc& doc);
  [[nodiscard]] KvDoc to_kv() const;
};

/// Replications and estimated mean at each distinct design point.
class PointData {
 public:
  explicit PointData(Eigen::Index dim) : dim_(dim) {}
  /// Appends the outputs to an existing identical point or starts a new one.
  void add(const sim::ReplicationSet& reps);
  [[nodiscard]] std::size_t size() const { return outputs_.size(); }
  [[nodiscard]] Matrix points() const;
  [[nodiscard]] Vector means() const;
  /// Sample variance over r, floored at `shrink` times the median and at `floor`;
  /// points with one replication take the median.
  [[nodiscard]] Vector noise(double shrink, double floor) const;
  [[nodiscard]] const std::vector<double>& outputs(std::size_t i) const { return outputs_[i]; }

 private:
  Eigen::Index dim_;
  std::vector<Point> points_;
  std::vector<std::vector<double>> outputs_;
};

/// Maximum-likelihood fit of a stationary kernel (log tau, log eta) with the
/// prior mean fixed at the average of y. Bounds scale with the spread of y and the box.
[[nodiscard]] gp::HyperFit fit_stationary_prior(const std::string& kernel, int two_nu, const Matrix& points,
                                                const Vector& y, const Vector& noise, const Box& box, int restarts,
                                                Engine& rng, std::optional<Vector> warm_start = std::nullopt);

/// Initial Latin-hypercube design, then per iteration: fit the GP posterior, pick
/// the next batch by the acquisition criterion over a fresh candidate grid,
/// simulate, and repeat until the budget is spent. The recommendation maximizes
/// the final posterior mean.
[[nodiscard]] OptimizationTrace sequential_template(const sim::SimulationModel& model, const GlobalConfig& config,
                                                    long budget, std::uint64_t seed);

}  // namespace simopt::opt
