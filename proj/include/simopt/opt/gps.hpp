#pragma once

#include "simopt/gp/kernel.hpp"
#include "simopt/sim/replication.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace simopt::opt {

/// lambda(x) over the data points (rows of `points`).
using WeightFamily = std::function<Vector(const Matrix& points, const Point& x)>;

/// lambda_i(x) proportional to |x - x_i|^{-p}, with p = d + 1 unless given. At a data
/// point the weight goes to that point (split evenly over exact duplicates).
[[nodiscard]] WeightFamily inverse_distance_weights(std::optional<double> power = std::nullopt);

/// GP model built from weights instead of a solve:
///   mu~(x) = lambda(x)^T ybar,
///   s~^2(x) = K(x,x) - 2 lambda(x)^T k(x) + lambda(x)^T (K + Sigma) lambda(x).
class GpsModel {
 public:
  /// Checks the weight conditions at every data point and at midpoints between
  /// consecutive data points; throws DomainError when one fails.
  GpsModel(gp::KernelPtr kernel, Matrix points, Vector ybar, Vector noise, WeightFamily weights);
  GpsModel(gp::KernelPtr kernel, const sim::Dataset& data, WeightFamily weights,
           std::optional<double> noise_floor = std::nullopt);

  [[nodiscard]] Vector weights(const Point& x) const;
  [[nodiscard]] double mean_at(const Point& x) const;
  /// Clamped at zero against round-off.
  [[nodiscard]] double var_at(const Point& x) const;
  [[nodiscard]] double raw_var_at(const Point& x) const;

  /// Throws DomainError if lambda(x) is negative, does not sum to one within 1e-10,
  /// or fails to interpolate at a data point in `validation`.
  void validate(const Matrix& validation) const;

  [[nodiscard]] const Matrix& points() const { return points_; }
  [[nodiscard]] const Vector& ybar() const { return ybar_; }
  [[nodiscard]] Eigen::Index size() const { return points_.rows(); }

 private:
  gp::KernelPtr kernel_;
  Matrix points_;
  Vector ybar_;
  Vector noise_;
  WeightFamily weights_;
  Matrix gram_;  // K + Sigma, used only in products
};

/// P(Z(x) > c) for Z(x) ~ N(mu~(x), s~^2(x)) at each grid row; a zero variance gives 1, 1/2 or 0.
[[nodiscard]] Vector gps_tail_weights(const GpsModel& model, double c, const Matrix& grid);

struct GpsDensity {
  Vector weights;          ///< normalized
  bool uniform_fallback = false;
};

/// Normalizes nonnegative weights; all zeros give the uniform density with the fallback flag set.
[[nodiscard]] GpsDensity normalize_density(const Vector& unnormalized);

[[nodiscard]] GpsDensity gps_density(const GpsModel& model, double c, const Matrix& grid);

enum class GpsSamplerKind { acceptance_rejection, mcmc };

struct GpsSampler {
  GpsSamplerKind kind = GpsSamplerKind::acceptance_rejection;
  /// mcmc: proposals move up to `width` grid indices either way (cyclically);
  /// 0 proposes any other index uniformly.
  int width = 0;
  int burn_in = 1000;
  int thin = 1;
};

/// Indices drawn from the density proportional to `weights` (need not be normalized).
[[nodiscard]] std::vector<Eigen::Index> gps_sample(const Vector& weights, const GpsSampler& sampler, int count,
                                                   Engine& rng);

}  // namespace simopt::opt
