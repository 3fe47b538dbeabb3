#pragma once

#include "simopt/gp/posterior.hpp"
#include "simopt/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace simopt::lowrank {

/// (U C V + diag(sigma))^{-1} b using only m x m factorizations.
[[nodiscard]] Vector woodbury_solve(const Vector& sigma_diag, const Matrix& u, const Matrix& c, const Matrix& v,
                                    const Vector& b);

struct ActiveSet {
  std::vector<Eigen::Index> indices;
  [[nodiscard]] Eigen::Index size() const { return static_cast<Eigen::Index>(indices.size()); }
};

/// Uniform sample of m of the indices 0..n-1 without replacement.
[[nodiscard]] ActiveSet select_active_set(Eigen::Index n, Eigen::Index m, Engine& rng);
[[nodiscard]] ActiveSet full_active_set(Eigen::Index n);

struct VarianceReport {
  double value = 0.0;    ///< as computed, before any clamping
  bool negative = false;
};

class ApproxPosterior : public gp::PosteriorView {
 public:
  [[nodiscard]] virtual std::string variant() const = 0;
  [[nodiscard]] virtual VarianceReport variance_report(const Point& x) const = 0;
  [[nodiscard]] Eigen::Index n() const { return n_; }
  [[nodiscard]] Eigen::Index m() const { return m_; }
  [[nodiscard]] double prior_var_at(const Point& x) const override { return prior_.kernel->variance_at(x); }
  [[nodiscard]] Eigen::Index dim() const override { return dim_; }
  [[nodiscard]] double var_at(const Point& x) const override;
  using gp::PosteriorView::mean_at;

 protected:
  ApproxPosterior(gp::GpPrior prior, Eigen::Index n, Eigen::Index m, Eigen::Index dim)
      : prior_(std::move(prior)), n_(n), m_(m), dim_(dim) {}
  gp::GpPrior prior_;
  Eigen::Index n_;
  Eigen::Index m_;
  Eigen::Index dim_;
};

/// K replaced by K_nm K_mm^{-1} K_mn inside the exact posterior formulas, evaluated
/// through the Woodbury identity. The variance can come out negative; var_at()
/// returns it unclamped and variance_report() flags it.
class NystromNaivePosterior final : public ApproxPosterior {
 public:
  NystromNaivePosterior(gp::GpPrior prior, const Matrix& points, const Vector& y, const Vector& noise,
                        const ActiveSet& active);

  [[nodiscard]] std::string variant() const override { return "nystrom_naive"; }
  [[nodiscard]] double mean_at(const Point& x) const override;
  [[nodiscard]] double cov_at(const Point& x, const Point& y) const override;
  [[nodiscard]] double var_at(const Point& x) const override { return cov_at(x, x); }
  [[nodiscard]] VarianceReport variance_report(const Point& x) const override;

 private:
  Matrix points_;
  Vector inv_noise_;
  Matrix a_sinv_;  // L^{-1} K_mn Sigma^{-1} with L L^T = K_mm
  linalg::Cholesky b_;  // I + A Sigma^{-1} A^T
  Vector weights_;  // (K~ + Sigma)^{-1} (y - mu)
};

/// Posterior of the GP with the induced kernel k_m(x)^T K_mm^{-1} k_m(x'); the
/// covariance keeps the exact prior K(x, x') as its leading term.
class NystromKernelPosterior final : public ApproxPosterior {
 public:
  NystromKernelPosterior(gp::GpPrior prior, const Matrix& points, const Vector& y, const Vector& noise,
                         const ActiveSet& active);

  [[nodiscard]] std::string variant() const override { return "nystrom_kernel"; }
  [[nodiscard]] double mean_at(const Point& x) const override;
  [[nodiscard]] double cov_at(const Point& x, const Point& y) const override;
  [[nodiscard]] VarianceReport variance_report(const Point& x) const override;

  /// k_m(x)^T Q^{-1} K_mn Sigma^{-1}, an n-vector (diagnostic; O(nm)).
  [[nodiscard]] Vector smoother_row(const Point& x) const;

 private:
  Matrix anchors_;
  linalg::Cholesky kmm_;
  Matrix a_sinv_;  // L^{-1} K_mn Sigma^{-1}
  linalg::Cholesky b_;  // I + A Sigma^{-1} A^T; Q = L B L^T
  Vector weights_;  // B^{-1} A Sigma^{-1} (y - mu)
};

/// Random Fourier features phi(x) = sqrt(2 k0 / m) cos(omega_t^T x + b_t).
struct RffBasis {
  std::uint64_t seed = 0;
  Matrix omegas;  ///< m x d
  Vector phases;  ///< m
  double k0 = 1.0;
  KvDoc kernel;

  [[nodiscard]] Eigen::Index m() const { return omegas.rows(); }
  [[nodiscard]] Vector features(const Point& x) const;
  /// n x m matrix with rows phi(X_i)^T.
  [[nodiscard]] Matrix features(const Matrix& points) const;

  /// Descriptor: seed, m, d and the kernel; the samples are regenerated on load.
  [[nodiscard]] KvDoc to_kv() const;
  [[nodiscard]] static RffBasis from_kv(const KvDoc& doc);
};

/// Samples omega from the kernel's spectral measure: normal with covariance eta^{-2} I for
/// the Gaussian kernel, Student t with 2 nu degrees of freedom and scale 1/eta for Matern.
[[nodiscard]] RffBasis spectral_sample(const gp::Kernel& kernel, Eigen::Index d, Eigen::Index m, std::uint64_t seed);

[[nodiscard]] double rff_kernel_estimate(const RffBasis& basis, const Point& x, const Point& y);

/// Posterior of the GP with kernel phi(x)^T phi(x'), with the exact prior K(x, x')
/// as the covariance's leading term. Variances are clamped at zero; the raw value is
/// available through variance_report().
class RffPosterior final : public ApproxPosterior {
 public:
  RffPosterior(gp::GpPrior prior, const Matrix& points, const Vector& y, const Vector& noise, RffBasis basis);

  [[nodiscard]] std::string variant() const override { return "rff"; }
  [[nodiscard]] double mean_at(const Point& x) const override;
  [[nodiscard]] double var_at(const Point& x) const override;
  [[nodiscard]] double cov_at(const Point& x, const Point& y) const override;
  [[nodiscard]] VarianceReport variance_report(const Point& x) const override;
  [[nodiscard]] const RffBasis& basis() const { return basis_; }

 private:
  RffBasis basis_;
  linalg::Cholesky a_;  // I + Phi^T Sigma^{-1} Phi, or Sigma + Phi Phi^T when m > n
  Matrix phi_;  // kept only in the m > n form
  Vector weights_;
};

/// k_m(x)^T K_mm^{-1} k_m(x')
class NystromInducedKernel final : public gp::Kernel {
 public:
  NystromInducedKernel(gp::KernelPtr base, Matrix anchors);
  [[nodiscard]] double operator()(const Point& x, const Point& y) const override;
  [[nodiscard]] std::string kind() const override { return "nystrom_induced"; }

 private:
  gp::KernelPtr base_;
  Matrix anchors_;
  linalg::Cholesky kmm_;
};

/// phi(x)^T phi(x')
class RffInducedKernel final : public gp::Kernel {
 public:
  explicit RffInducedKernel(RffBasis basis) : basis_(std::move(basis)) {}
  [[nodiscard]] double operator()(const Point& x, const Point& y) const override {
    return rff_kernel_estimate(basis_, x, y);
  }
  [[nodiscard]] std::string kind() const override { return "rff_induced"; }
  [[nodiscard]] KvDoc describe() const override;

 private:
  RffBasis basis_;
};

struct ScalingRow {
  std::string variant;
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  double build_ms = 0.0;
  double query_ms = 0.0;
};

struct ScalingReport {
  std::vector<ScalingRow> rows;
  double slope = 0.0;  ///< least-squares slope of log(build_ms) on log(n)

  void write(std::ostream& out, char sep = ',') const;
};

/// y = sin(x_1) + cos(x_2) + N(0, 0.01) at n uniform points of [0, 10]^2, plus uniform query points.
struct SyntheticRegression {
  Matrix points;
  Vector y;
  Vector noise;
  Matrix queries;
};
[[nodiscard]] SyntheticRegression synthetic_regression(Eigen::Index n, Eigen::Index queries, std::uint64_t seed);

/// Times posterior construction ("exact", "nystrom_naive", "nystrom_kernel" or "rff") on
/// synthetic 2-D data for each n; each entry is the median of `repeats` runs.
[[nodiscard]] ScalingReport scaling_report(const std::string& variant, const std::vector<Eigen::Index>& n_grid,
                                           Eigen::Index m, int repeats = 3, std::uint64_t seed = 1);

[[nodiscard]] double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

struct MSelection {
  Eigen::Index m = 0;
  std::vector<Eigen::Index> tried;
  std::vector<double> holdout_rmse;
};

/// Increases m along `m_grid` until the relative improvement in held-out RMSE of
/// the posterior mean falls below `threshold`.
[[nodiscard]] MSelection choose_m(const std::string& variant, const gp::GpPrior& prior, const Matrix& points,
                                  const Vector& y, const Vector& noise, const std::vector<Eigen::Index>& m_grid,
                                  double holdout_fraction, double threshold, std::uint64_t seed);

[[nodiscard]] std::unique_ptr<ApproxPosterior> make_approx(const std::string& variant, const gp::GpPrior& prior,
                                                           const Matrix& points, const Vector& y,
                                                           const Vector& noise, Eigen::Index m, std::uint64_t seed);

}  // namespace simopt::lowrank
