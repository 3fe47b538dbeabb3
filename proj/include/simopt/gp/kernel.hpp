#pragma once

#include "simopt/common.hpp"
#include "simopt/kv.hpp"

#include <memory>
#include <string>
#include <vector>

namespace simopt::surrogates {
class FeatureMap;
}

namespace simopt::gp {

class Kernel;
using KernelPtr = std::shared_ptr<const Kernel>;

/// Symmetric positive-semidefinite covariance function K(x, x').
class Kernel {
 public:
  virtual ~Kernel() = default;

  [[nodiscard]] virtual double operator()(const Point& x, const Point& y) const = 0;
  [[nodiscard]] virtual std::string kind() const = 0;
  [[nodiscard]] virtual bool stationary() const { return false; }

  /// K(X_i, Y_j) for the rows of X and Y.
  [[nodiscard]] virtual Matrix cross(const Matrix& x, const Matrix& y) const;
  /// K(X_i, y) for the rows of X.
  [[nodiscard]] virtual Vector cross(const Matrix& x, const Point& y) const;
  [[nodiscard]] Matrix gram(const Matrix& x) const;
  [[nodiscard]] double variance_at(const Point& x) const { return (*this)(x, x); }

  /// Positive hyperparameters in log scale, in the order of param_names().
  [[nodiscard]] virtual Vector log_params() const { return Vector(0); }
  [[nodiscard]] virtual std::vector<std::string> param_names() const { return {}; }
  [[nodiscard]] virtual KernelPtr with_log_params(const Vector& theta) const;

  /// Descriptor in the key-value format; kernel_from_kv() inverts it where possible.
  [[nodiscard]] virtual KvDoc describe() const;
};

/// Isotropic stationary kernel tau^2 * rho(|x - x'| / eta).
class StationaryKernel : public Kernel {
 public:
  StationaryKernel(double tau, double eta);

  [[nodiscard]] double operator()(const Point& x, const Point& y) const final;
  [[nodiscard]] Matrix cross(const Matrix& x, const Matrix& y) const final;
  [[nodiscard]] Vector cross(const Matrix& x, const Point& y) const final;
  [[nodiscard]] bool stationary() const final { return true; }

  /// Value at distance r.
  [[nodiscard]] virtual double profile(double r) const = 0;

  [[nodiscard]] double tau() const { return tau_; }
  [[nodiscard]] double eta() const { return eta_; }
  [[nodiscard]] double k0() const { return tau_ * tau_; }

  [[nodiscard]] Vector log_params() const override;
  [[nodiscard]] std::vector<std::string> param_names() const override { return {"tau", "eta"}; }

 protected:
  double tau_;
  double eta_;
};

/// tau^2 exp(-r^2 / (2 eta^2))
class GaussianKernel final : public StationaryKernel {
 public:
  GaussianKernel(double tau, double eta) : StationaryKernel(tau, eta) {}
  [[nodiscard]] double profile(double r) const override;
  [[nodiscard]] std::string kind() const override { return "gaussian"; }
  [[nodiscard]] KernelPtr with_log_params(const Vector& theta) const override;
  [[nodiscard]] KvDoc describe() const override;
};

/// Half-integer Matern; `two_nu` is 1, 3 or 5.
class MaternKernel final : public StationaryKernel {
 public:
  MaternKernel(double tau, double eta, int two_nu);
  [[nodiscard]] double profile(double r) const override;
  [[nodiscard]] std::string kind() const override { return "matern"; }
  [[nodiscard]] double nu() const { return two_nu_ / 2.0; }
  [[nodiscard]] int two_nu() const { return two_nu_; }
  [[nodiscard]] KernelPtr with_log_params(const Vector& theta) const override;
  [[nodiscard]] KvDoc describe() const override;

 private:
  int two_nu_;
};

/// Tensor product of one-dimensional integrated Brownian kernels on the nonnegative orthant.
class GibfKernel final : public Kernel {
 public:
  /// theta[j] has m[j] + 2 positive entries.
  GibfKernel(std::vector<int> m, std::vector<Vector> theta);

  [[nodiscard]] double operator()(const Point& x, const Point& y) const override;
  [[nodiscard]] std::string kind() const override { return "gibf"; }
  [[nodiscard]] double component(std::size_t j, double a, double b) const;

  [[nodiscard]] Vector log_params() const override;
  [[nodiscard]] std::vector<std::string> param_names() const override;
  [[nodiscard]] KernelPtr with_log_params(const Vector& theta) const override;
  [[nodiscard]] KvDoc describe() const override;

  [[nodiscard]] const std::vector<int>& orders() const { return m_; }

 private:
  std::vector<int> m_;
  std::vector<Vector> theta_;
};

/// Integral over u in [0, min(a, b)] of (a - u)^m (b - u)^m.
[[nodiscard]] double ibf_integral(double a, double b, int m);

/// K(x, x') = phi(x)^T phi(x').
class InnerProductKernel final : public Kernel {
 public:
  explicit InnerProductKernel(std::shared_ptr<const surrogates::FeatureMap> features);
  [[nodiscard]] double operator()(const Point& x, const Point& y) const override;
  [[nodiscard]] Matrix cross(const Matrix& x, const Matrix& y) const override;
  [[nodiscard]] std::string kind() const override { return "inner_product"; }
  [[nodiscard]] KvDoc describe() const override;

 private:
  std::shared_ptr<const surrogates::FeatureMap> features_;
};

[[nodiscard]] double kernel_gaussian(const Point& x, const Point& y, double tau, double eta);
[[nodiscard]] double kernel_matern(const Point& x, const Point& y, double tau, double eta, double nu);
[[nodiscard]] double kernel_gibf(const Point& x, const Point& y, const std::vector<int>& m,
                                 const std::vector<Vector>& theta);

/// Builds gaussian/matern/gibf kernels from a descriptor (`kind`, `tau`, `eta`, `nu`, `m`, `theta.<j>`).
[[nodiscard]] KernelPtr kernel_from_kv(const KvDoc& doc);

struct MaternLimitReport {
  std::vector<double> distances;
  std::vector<double> matern52;
  std::vector<double> gaussian;
  std::vector<double> gap;
  double max_gap = 0.0;
};

/// Gap between the smoothest supported Matern (nu = 5/2) and the Gaussian kernel.
[[nodiscard]] MaternLimitReport matern_limit_check(double tau, double eta, const std::vector<double>& distances);

}  // namespace simopt::gp
