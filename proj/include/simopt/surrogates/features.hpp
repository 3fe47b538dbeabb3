#pragma once

#include "simopt/common.hpp"
#include "simopt/kv.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace simopt::surrogates {

/// x -> phi(x) = (phi_1(x), ..., phi_p(x)).
class FeatureMap {
 public:
  virtual ~FeatureMap() = default;

  [[nodiscard]] virtual Eigen::Index size() const = 0;
  [[nodiscard]] virtual Eigen::Index dim() const = 0;
  [[nodiscard]] virtual Vector evaluate(const Point& x) const = 0;

  [[nodiscard]] virtual bool has_jacobian() const { return false; }
  /// p x d matrix of partial derivatives d phi_k / d x_j.
  [[nodiscard]] virtual Matrix jacobian(const Point& x) const;

  [[nodiscard]] virtual KvDoc describe() const = 0;

  /// n x p matrix with rows phi(X_i)^T.
  [[nodiscard]] Matrix design_matrix(const Matrix& points) const;
};

using FeatureMapPtr = std::shared_ptr<const FeatureMap>;
using Stylized = std::function<double(const Point&)>;
using StylizedGradient = std::function<Vector(const Point&)>;

/// Constant and linear terms; order 2 adds x_j x_k for j <= k.
[[nodiscard]] FeatureMapPtr polynomial_features(Eigen::Index d, int order);

enum class RbfKind { gaussian, thin_plate };

/// phi_k(x) = rho(|x - c_k|) with rho(r) = exp(-r^2 / (2 eta^2)) or r^2 ln r (0 at r = 0).
[[nodiscard]] FeatureMapPtr rbf_features(std::vector<Point> centers, RbfKind kind, double eta = 1.0);

/// Appends psi(x) as the last feature. `name` identifies psi when the map is serialized.
[[nodiscard]] FeatureMapPtr augment_with_stylized(FeatureMapPtr base, Stylized psi, std::string name = "psi",
                                                  StylizedGradient psi_gradient = {});

/// Maps a stylized-model name back to the function when loading a descriptor.
using StylizedResolver = std::function<Stylized(const std::string& name)>;

[[nodiscard]] FeatureMapPtr feature_map_from_kv(const KvDoc& doc, const StylizedResolver& resolve = {});

}  // namespace simopt::surrogates
