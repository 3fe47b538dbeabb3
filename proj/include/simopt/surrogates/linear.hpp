#pragma once

#include "simopt/gp/kernel.hpp"
#include "simopt/sim/replication.hpp"
#include "simopt/surrogates/features.hpp"

namespace simopt::surrogates {

enum class FitKind { ols, rls, gls };

/// beta^T phi(x)
struct LinearSurrogate {
  FeatureMapPtr features;
  Vector beta;
  FitKind kind = FitKind::ols;
  double lambda = 0.0;

  [[nodiscard]] double predict(const Point& x) const { return beta.dot(features->evaluate(x)); }
  [[nodiscard]] Vector gradient(const Point& x) const { return features->jacobian(x).transpose() * beta; }

  [[nodiscard]] KvDoc to_kv() const;
  [[nodiscard]] static LinearSurrogate from_kv(const KvDoc& doc, const StylizedResolver& resolve = {});
};

/// Least squares on the n x p design matrix; throws RankDeficiencyError unless it has full column rank.
[[nodiscard]] LinearSurrogate fit_ols(FeatureMapPtr features, const sim::Dataset& data);
[[nodiscard]] LinearSurrogate fit_ols(FeatureMapPtr features, const Matrix& points, const Vector& y);

/// beta = Phi^T (Phi Phi^T + n lambda I)^{-1} y via the n x n system.
/// With lambda = 0 and more observations than features, this is the least-squares fit.
[[nodiscard]] LinearSurrogate fit_rls(FeatureMapPtr features, const sim::Dataset& data, double lambda);
[[nodiscard]] LinearSurrogate fit_rls(FeatureMapPtr features, const Matrix& points, const Vector& y, double lambda);

/// Stacked value-and-gradient system: for each point, one row for the mean and d rows for the partials.
struct AugmentedSystem {
  Matrix phi;  ///< n(d+1) x p
  Vector y;    ///< n(d+1)
  std::vector<int> reps;
};

[[nodiscard]] AugmentedSystem build_augmented_system(const FeatureMap& features, const sim::Dataset& data);

/// Generalized least squares on the augmented system with block-diagonal
/// covariance diag(V / r_1, ..., V / r_n).
[[nodiscard]] LinearSurrogate fit_gls_with_gradients(FeatureMapPtr features, const sim::Dataset& data, const Matrix& v);

/// Ordinary least squares on the same augmented system (no weighting).
[[nodiscard]] LinearSurrogate fit_augmented_ols(FeatureMapPtr features, const sim::Dataset& data);

/// k(x)^T (K + n lambda I)^{-1} y
[[nodiscard]] double krr_predict(const gp::Kernel& kernel, const sim::Dataset& data, double lambda, const Point& x);
[[nodiscard]] Vector krr_predict(const gp::Kernel& kernel, const Matrix& points, const Vector& y, double lambda,
                                 const Matrix& queries);

}  // namespace simopt::surrogates
