#pragma once

#include "simopt/common.hpp"
#include "simopt/rng.hpp"

#include <functional>

namespace simopt::numopt {

using Objective = std::function<double(const Vector&)>;

/// n points of a Latin hypercube over the box, one per row.
[[nodiscard]] Matrix latin_hypercube(Eigen::Index n, const Box& box, Engine& rng);

/// n points drawn uniformly from the box, one per row.
[[nodiscard]] Matrix uniform_points(Eigen::Index n, const Box& box, Engine& rng);

struct MaxResult {
  Vector x;
  double value = 0.0;
  int evaluations = 0;
};

struct BfgsOptions {
  int max_iterations = 100;
  double fd_step = 1e-5;       ///< relative to the box width per coordinate
  double gradient_tol = 1e-6;  ///< on the projected gradient
  double value_tol = 1e-10;
};

/// Projected BFGS ascent with central-difference gradients. Evaluations that
/// throw or return NaN count as -infinity.
[[nodiscard]] MaxResult maximize_box(const Objective& f, Vector x0, const Box& box, const BfgsOptions& options = {});

/// Compass search: poll +-step along each axis, halve on failure.
[[nodiscard]] MaxResult pattern_search_max(const Objective& f, Vector x0, const Box& box, double initial_step,
                                           double min_step, int max_evaluations = 2000);

}  // namespace simopt::numopt
