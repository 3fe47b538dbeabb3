#pragma once

#include "simopt/gp/kernel.hpp"
#include "simopt/linalg.hpp"
#include "simopt/sim/replication.hpp"
#include "simopt/surrogates/features.hpp"

#include <functional>
#include <memory>
#include <optional>

namespace simopt::gp {

/// Prior mean: a constant, beta^T phi(x), or scale * psi(x).
class MeanFunction {
 public:
  enum class Kind { constant, basis, stylized };

  MeanFunction() = default;
  [[nodiscard]] static MeanFunction constant(double c);
  [[nodiscard]] static MeanFunction basis(Vector beta, surrogates::FeatureMapPtr features);
  [[nodiscard]] static MeanFunction stylized(surrogates::Stylized psi, double scale = 1.0, std::string name = "psi");

  [[nodiscard]] double operator()(const Point& x) const;
  [[nodiscard]] Vector at(const Matrix& points) const;
  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] double constant_value() const { return c_; }
  [[nodiscard]] MeanFunction with_constant(double c) const;
  [[nodiscard]] KvDoc describe() const;

 private:
  Kind kind_ = Kind::constant;
  double c_ = 0.0;
  Vector beta_;
  surrogates::FeatureMapPtr features_;
  surrogates::Stylized psi_;
  std::string psi_name_;
};

struct GpPrior {
  MeanFunction mean;
  KernelPtr kernel;
};

/// Read-only access to a posterior (exact or approximate).
class PosteriorView {
 public:
  virtual ~PosteriorView() = default;
  [[nodiscard]] virtual double mean_at(const Point& x) const = 0;
  [[nodiscard]] virtual double cov_at(const Point& x, const Point& y) const = 0;
  /// Posterior variance, clamped at zero.
  [[nodiscard]] virtual double var_at(const Point& x) const = 0;
  [[nodiscard]] virtual double prior_var_at(const Point& x) const = 0;
  [[nodiscard]] virtual Eigen::Index dim() const = 0;

  [[nodiscard]] Vector mean_at(const Matrix& points) const;
  [[nodiscard]] Matrix cov_matrix(const Matrix& points) const;
};

/// Values in [-1e-8 K(x,x), 0) become 0; anything lower is an error.
[[nodiscard]] double clamp_variance(double v, double prior_var);

/// Exact GP posterior given (K + Sigma) with Sigma = diag(noise variances).
class GpPosterior final : public PosteriorView {
 public:
  /// Noise variances are taken from the dataset; unknown entries use `noise_floor`.
  GpPosterior(GpPrior prior, const sim::Dataset& data, std::optional<double> noise_floor = std::nullopt);
  GpPosterior(GpPrior prior, Matrix points, Vector y, Vector noise);

  [[nodiscard]] double mean_at(const Point& x) const override;
  [[nodiscard]] double cov_at(const Point& x, const Point& y) const override;
  [[nodiscard]] double var_at(const Point& x) const override;
  [[nodiscard]] double prior_var_at(const Point& x) const override { return prior_.kernel->variance_at(x); }
  [[nodiscard]] Eigen::Index dim() const override { return points_.cols(); }
  using PosteriorView::mean_at;

  /// Unclamped K_n(x, x).
  [[nodiscard]] double raw_var_at(const Point& x) const;
  /// Posterior means and variances at many points in one pass.
  void predict(const Matrix& points, Vector& mean, Vector& var) const;

  [[nodiscard]] const GpPrior& prior() const { return prior_; }
  [[nodiscard]] const Matrix& points() const { return points_; }
  [[nodiscard]] const Vector& y() const { return y_; }
  [[nodiscard]] const Vector& noise() const { return noise_; }
  [[nodiscard]] const Vector& weights() const { return weights_; }
  [[nodiscard]] const linalg::Cholesky& factor() const { return chol_; }
  [[nodiscard]] Eigen::Index size() const { return points_.rows(); }

 private:
  void build();
  GpPrior prior_;
  Matrix points_;
  Vector y_;
  Vector noise_;
  Vector prior_mean_;
  linalg::Cholesky chol_;
  Vector weights_;  // (K + Sigma)^{-1} (y - mu)
};

/// Posterior after one extra observation y_next at x_next with noise variance noise_next,
/// expressed through the previous posterior (rank-one update).
class UpdatedPosterior final : public PosteriorView {
 public:
  UpdatedPosterior(std::shared_ptr<const PosteriorView> base, Point x_next, double y_next, double noise_next);

  [[nodiscard]] double mean_at(const Point& x) const override;
  [[nodiscard]] double cov_at(const Point& x, const Point& y) const override;
  [[nodiscard]] double var_at(const Point& x) const override;
  [[nodiscard]] double prior_var_at(const Point& x) const override { return base_->prior_var_at(x); }
  [[nodiscard]] Eigen::Index dim() const override { return base_->dim(); }
  using PosteriorView::mean_at;

  /// delta_n(x, x_next)
  [[nodiscard]] double delta(const Point& x) const;
  /// Standardized innovation Z_{n+1}.
  [[nodiscard]] double innovation() const { return z_; }

 private:
  std::shared_ptr<const PosteriorView> base_;
  Point x_next_;
  double scale_;  // sqrt(K_n(x_next, x_next) + noise)
  double z_;
};

[[nodiscard]] std::shared_ptr<const UpdatedPosterior> kg_update(std::shared_ptr<const PosteriorView> post,
                                                                const Point& x_next, double y_next,
                                                                double noise_next);

/// log N(y; mu, K + Sigma) using the Cholesky factor of K + Sigma.
[[nodiscard]] double log_marginal_likelihood(const GpPrior& prior, const Matrix& points, const Vector& y,
                                             const Vector& noise);
[[nodiscard]] double log_marginal_likelihood(const GpPrior& prior, const sim::Dataset& data,
                                             std::optional<double> noise_floor = std::nullopt);

/// A prior family indexed by a flat hyperparameter vector: the kernel's
/// log-scale parameters, optionally followed by the constant mean c.
struct PriorFamily {
  KernelPtr kernel;
  MeanFunction mean = MeanFunction::constant(0.0);
  bool fit_constant_mean = false;

  [[nodiscard]] Eigen::Index size() const;
  [[nodiscard]] std::vector<std::string> names() const;
  [[nodiscard]] Vector initial() const;
  [[nodiscard]] GpPrior build(const Vector& theta) const;
};

struct HyperBounds {
  Vector lower;
  Vector upper;
};

/// Bounds for a stationary kernel: tau in [tau_lo, tau_hi], eta in [eta_lo, eta_hi],
/// and the constant mean (when fitted) within [c_lo, c_hi].
[[nodiscard]] HyperBounds stationary_bounds(double tau_lo, double tau_hi, double eta_lo, double eta_hi,
                                            std::optional<std::pair<double, double>> mean_range = std::nullopt);

struct HyperFit {
  Vector theta;
  double log_likelihood = 0.0;
  GpPrior prior;
  std::vector<Vector> starts;
  std::vector<double> start_values;  ///< log-likelihood at each start (-inf if it failed)
  std::vector<double> local_values;  ///< best value reached from each start
};

struct HyperFitOptions {
  int restarts = 8;
  int max_iterations = 100;
  /// Use `extra_start` as the first start point, if given.
  std::optional<Vector> extra_start;
};

/// Multi-start projected BFGS on the log marginal likelihood with
/// finite-difference gradients. Starts come from a Latin hypercube over the bounds.
[[nodiscard]] HyperFit fit_hyperparameters(const PriorFamily& family, const Matrix& points, const Vector& y,
                                           const Vector& noise, const HyperBounds& bounds, Engine& rng,
                                           const HyperFitOptions& options = {});
[[nodiscard]] HyperFit fit_hyperparameters(const PriorFamily& family, const sim::Dataset& data,
                                           const HyperBounds& bounds, Engine& rng,
                                           const HyperFitOptions& options = {},
                                           std::optional<double> noise_floor = std::nullopt);

}  // namespace simopt::gp
