#pragma once

#include "simopt/common.hpp"
#include "simopt/rng.hpp"

#include <optional>
#include <string>
#include <utility>

namespace simopt::sim {

/// Output of one replication that also carries a direct gradient estimate.
struct GradientSample {
  double value = 0.0;
  Vector gradient;
};

/// A stochastic simulation F(x) with f(x) = E[F(x)], to be maximized over a box.
///
/// Implementations are immutable after construction; evaluate() must depend
/// only on the point and the engine state.
class SimulationModel {
 public:
  virtual ~SimulationModel() = default;

  [[nodiscard]] virtual std::string id() const = 0;
  [[nodiscard]] virtual const Box& box() const = 0;
  [[nodiscard]] Eigen::Index dim() const { return box().dim(); }

  [[nodiscard]] virtual double evaluate(const Point& x, Engine& rng) const = 0;

  [[nodiscard]] virtual bool has_gradient() const { return false; }
  [[nodiscard]] virtual GradientSample evaluate_with_gradient(const Point& x, Engine& rng) const;

  /// Closed-form value of a stylized approximation, if the model has one.
  [[nodiscard]] virtual std::optional<double> stylized(const Point&) const { return std::nullopt; }

  /// Ground truth, available for constructed test surfaces only.
  [[nodiscard]] virtual std::optional<double> true_mean(const Point&) const { return std::nullopt; }
  [[nodiscard]] virtual std::optional<Point> known_argmax() const { return std::nullopt; }
  [[nodiscard]] virtual std::optional<double> known_max() const { return std::nullopt; }
};

}  // namespace simopt::sim
