#pragma once

#include "simopt/common.hpp"
#include "simopt/rng.hpp"
#include "simopt/sim/model.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace simopt::sim {

struct ReplicationSet {
  Point point;
  std::vector<double> outputs;
  std::vector<Vector> gradients;  ///< empty, or one d-vector per output
};

/// (x_i, ybar_i, r_i, sigma^2(x_i)/r_i) plus the optional mean gradient.
struct AggregatedObservation {
  Point point;
  double mean = 0.0;
  int reps = 1;
  /// Estimated variance of `mean`; unknown for a single replication.
  std::optional<double> noise_var;
  std::optional<Vector> grad_mean;
};

class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(Eigen::Index dim) : dim_(dim) {}
  Dataset(Eigen::Index dim, std::vector<AggregatedObservation> obs);

  void add(AggregatedObservation obs);

  [[nodiscard]] Eigen::Index dim() const { return dim_; }
  [[nodiscard]] std::size_t size() const { return obs_.size(); }
  [[nodiscard]] bool empty() const { return obs_.empty(); }
  [[nodiscard]] const AggregatedObservation& operator[](std::size_t i) const { return obs_[i]; }
  [[nodiscard]] const std::vector<AggregatedObservation>& observations() const { return obs_; }

  /// n x d matrix whose i-th row is x_i.
  [[nodiscard]] Matrix points() const;
  [[nodiscard]] Point point(std::size_t i) const { return obs_[i].point; }
  [[nodiscard]] Vector means() const;
  [[nodiscard]] bool has_gradients() const;

  /// Diagonal of Sigma. Unknown entries take `floor`; without a floor they are an error.
  [[nodiscard]] Vector noise_variances(std::optional<double> floor = std::nullopt) const;

  [[nodiscard]] Dataset subset(const std::vector<std::size_t>& indices) const;

 private:
  Eigen::Index dim_ = 0;
  std::vector<AggregatedObservation> obs_;
};

/// Runs r independent replications; replication l draws from the l-th engine of `rng`.
[[nodiscard]] ReplicationSet run_replications(const SimulationModel& model, const Point& point, int r,
                                              RngStream& rng);

[[nodiscard]] AggregatedObservation aggregate(const ReplicationSet& reps);

/// Pooled sample covariance of the per-replication (y, g_1, ..., g_d) vectors.
[[nodiscard]] Matrix pooled_value_gradient_covariance(const std::vector<ReplicationSet>& sets);

/// Delimited text with header x_1..x_d,mean,reps,noise_var[,g_1..g_d].
void write_dataset(std::ostream& out, const Dataset& data, char sep = ',');
[[nodiscard]] Dataset read_dataset(std::istream& in, char sep = ',');

}  // namespace simopt::sim
