#pragma once

#include "simopt/opt/run.hpp"

#include <optional>
#include <vector>

namespace simopt::opt {

// ---- designs and local models -------------------------------------------

/// Rows of +-1. Full 2^d factorial, or with `fractional` the smallest 2^k >= d + 1 runs
/// where the columns past k are products of base columns (resolution III).
[[nodiscard]] Matrix two_level_design(Eigen::Index d, bool fractional);

/// Coded central composite design: full factorial for d <= 5 (fractional above),
/// axial points at +-alpha, then `centers` center rows.
[[nodiscard]] Matrix central_composite(Eigen::Index d, double alpha, int centers);

/// r(s) = b0 + g^T s + s^T H s / 2 in offsets s = x - center.
struct LocalModel {
  double b0 = 0.0;
  Vector g;
  Matrix h;
  [[nodiscard]] double value(const Vector& s) const { return b0 + g.dot(s) + 0.5 * s.dot(h * s); }
  [[nodiscard]] double improvement(const Vector& s) const { return g.dot(s) + 0.5 * s.dot(h * s); }
};

/// Least-squares fit of a first-order (H = 0) or second-order polynomial on the offsets.
/// Throws RankDeficiencyError if the design cannot identify the model.
[[nodiscard]] LocalModel fit_local_model(const Matrix& offsets, const Vector& y, int order);

/// argmax of g^T s + s^T H s / 2 over |s| <= radius, from the eigendecomposition of H.
[[nodiscard]] Vector trust_region_step(const Vector& g, const Matrix& h, double radius);

// ---- RSM ----------------------------------------------------------------

struct RsmConfig {
  std::optional<Point> start;        ///< default: box center
  std::optional<double> step;        ///< stage-1 line-search step; default 0.05 * box diagonal
  std::optional<double> halfwidth;   ///< factorial half-width; default 0.05 * smallest box width
  int center_points = 4;
  int reps = 1;
  double alpha = 0.05;
  /// Without replication noise: the first-order model is inadequate once the RMS
  /// lack of fit exceeds this fraction of halfwidth * |gradient|.
  double lof_relative = 0.1;
  int max_stage1 = 50;
  int max_line_steps = 200;

  [[nodiscard]] static RsmConfig from_kv(const KvDoc& doc);
  [[nodiscard]] KvDoc to_kv() const;
};

struct LackOfFit {
  double ss_lof = 0.0;
  double ss_pe = 0.0;
  long df_lof = 0;
  long df_pe = 0;
  double statistic = 0.0;  ///< F, or the relative RMS lack of fit without noise
  bool inadequate = false;
};

/// Lack-of-fit check of a first-order model on replicated design points.
[[nodiscard]] LackOfFit first_order_lack_of_fit(const Matrix& offsets, const std::vector<std::vector<double>>& outputs,
                                                const LocalModel& model, double halfwidth, double alpha,
                                                double lof_relative);

[[nodiscard]] OptimizationTrace rsm_run(const sim::SimulationModel& model, const RsmConfig& config, long budget,
                                        std::uint64_t seed);

// ---- STRONG ---------------------------------------------------------------

struct TrustRegionState {
  Point center;
  double radius = 1.0;
  double threshold = 1.0;  ///< first-order model while radius >= threshold
  double gamma1 = 0.5;
  double gamma2 = 1.5;
  double eta0 = 0.25;
  double eta1 = 0.75;
  long k = 0;
  std::vector<double> center_outputs;  ///< all replications taken at the current center

  /// Throws DomainError unless 0 < gamma1 < 1 < gamma2, 0 < eta0 < eta1 < 1 and radius > 0.
  void validate() const;
};

enum class StrongBranch { expand, keep, shrink_ratio, shrink_test, shrink_degenerate };

struct StrongDecision {
  bool move = false;
  double radius = 0.0;
  StrongBranch branch = StrongBranch::shrink_test;
};

/// The update table: failed test -> stay, shrink; rho >= eta1 -> move, expand;
/// eta0 <= rho < eta1 -> move, keep; rho < eta0 -> stay, shrink.
[[nodiscard]] StrongDecision strong_transition(const TrustRegionState& state, bool passed, double rho);

struct StrongConfig {
  double gamma1 = 0.5;
  double gamma2 = 1.5;
  double eta0 = 0.25;
  double eta1 = 0.75;
  double alpha = 0.05;
  std::optional<double> threshold;       ///< default 0.2 * diagonal / sqrt(d)
  std::optional<double> initial_radius;  ///< default: 0.75 * threshold
  std::optional<Point> start;            ///< default: box center
  int base_reps = 10;
  double rep_growth = 0.5;  ///< replications per design point: ceil(base_reps * k^rep_growth)
  double min_radius_fraction = 1e-9;

  [[nodiscard]] int reps(long k) const;
  [[nodiscard]] TrustRegionState initial_state(const Box& box) const;
  [[nodiscard]] static StrongConfig from_kv(const KvDoc& doc);
  [[nodiscard]] KvDoc to_kv() const;
};

struct StrongStep {
  int order = 1;
  Point candidate;
  double predicted = 0.0;
  double observed = 0.0;
  double rho = 0.0;
  bool passed = false;
  StrongDecision decision;
};

/// Number of replications one iteration of the state will need.
[[nodiscard]] long strong_step_cost(const TrustRegionState& state, const StrongConfig& config, Eigen::Index d);

/// One iteration: local design and model, subproblem, candidate simulation, tests, update.
StrongStep strong_step(RunContext& ctx, TrustRegionState& state, const StrongConfig& config);

[[nodiscard]] OptimizationTrace strong_run(const sim::SimulationModel& model, const StrongConfig& config, long budget,
                                           std::uint64_t seed);

// ---- SPAS -----------------------------------------------------------------

struct SpasConfig {
  std::optional<Point> start;  ///< default: box center
  double initial_halfwidth = 0.5;  ///< fraction of the box width per coordinate
  int candidates = 4;
  int reps = 2;
  int incumbent_reps = 2;
  double ball_exponent = 1.0 / 3.0;
  double ball_scale = 1.0;  ///< r_0 as a multiple of the current area half-width
  double floor_fraction = 1e-3;
  int grid_per_dim = 64;
  int max_surrogate_points = 200;

  [[nodiscard]] static SpasConfig from_kv(const KvDoc& doc);
  [[nodiscard]] KvDoc to_kv() const;
};

/// Mean of every sample whose point lies within `radius` of x (Euclidean).
[[nodiscard]] double shrinking_ball_estimate(const std::vector<Point>& points, const std::vector<double>& outputs,
                                             const Point& x, double radius);

[[nodiscard]] OptimizationTrace spas_run(const sim::SimulationModel& model, const SpasConfig& config, long budget,
                                         std::uint64_t seed);

}  // namespace simopt::opt
