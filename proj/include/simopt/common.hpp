#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace simopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A design point x = (x_1, ..., x_d) in problem units.
using Point = Eigen::VectorXd;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid argument value (negative ridge parameter, unstable queue, ...).
struct DomainError : Error {
  using Error::Error;
};

/// Point outside the feasible box.
struct FeasibilityError : Error {
  using Error::Error;
};

/// Design matrix without full column rank.
struct RankDeficiencyError : Error {
  using Error::Error;
};

/// Cholesky/LU failure after jitter escalation.
struct FactorizationError : Error {
  using Error::Error;
};

/// The object does not support the requested operation (no gradients, nonstationary kernel, ...).
struct CapabilityError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct BudgetExhausted : Error {
  using Error::Error;
};

/// Axis-aligned feasible region.
struct Box {
  Vector lower;
  Vector upper;

  [[nodiscard]] Eigen::Index dim() const { return lower.size(); }
  [[nodiscard]] bool contains(const Point& x, double tol = 0.0) const {
    if (x.size() != lower.size()) return false;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      if (!(x[j] >= lower[j] - tol && x[j] <= upper[j] + tol)) return false;
    }
    return true;
  }
  [[nodiscard]] Point project(const Point& x) const { return x.cwiseMax(lower).cwiseMin(upper); }
  [[nodiscard]] Vector width() const { return upper - lower; }
  [[nodiscard]] Point center() const { return 0.5 * (lower + upper); }
  [[nodiscard]] double diagonal() const { return width().norm(); }
};

}  // namespace simopt
