#pragma once

#include "simopt/gp/posterior.hpp"

namespace simopt::opt {

/// E[max_i (a_i + b_i Z)] - max_i a_i for standard normal Z, via the upper envelope of the lines.
[[nodiscard]] double expected_max_gain(const Vector& a, const Vector& b);

/// Lines a_i + b_i Z for the points of `set` plus the candidate itself, under one more
/// observation at the candidate: a = mu_n, b = delta_n(., x).
///
/// Factors the set against the posterior once, so scoring many candidates costs
/// O(n^2 + n q) each.
class KgProxy {
 public:
  KgProxy(const gp::GpPosterior& post, Matrix set);

  /// Intercepts and slopes over set + {x}; throws DomainError if K_n(x,x) + noise is not positive.
  void lines(const Point& x, double noise, Vector& a, Vector& b) const;

  [[nodiscard]] double score(const Point& x, double noise) const;
  /// Sample-average estimate of the same expectation from `samples` draws of Z.
  [[nodiscard]] double score_saa(const Point& x, double noise, int samples, Engine& rng) const;

  [[nodiscard]] const Matrix& set() const { return set_; }

 private:
  const gp::GpPosterior* post_;
  Matrix set_;
  Vector mean_;
  Matrix half_;  // L^{-1} K(X, set)
};

/// Discrete proxy: the expectation over the n + 1 points {set, x}.
[[nodiscard]] double kg_score_discrete(const gp::GpPosterior& post, const Matrix& set, const Point& x, double noise);

[[nodiscard]] double kg_score_saa(const gp::GpPosterior& post, const Point& x, double noise, const Matrix& grid,
                                  int samples, Engine& rng);

/// mu_n(x) + sqrt(gamma K_n(x,x)), with K_n(x,x) clamped at zero.
[[nodiscard]] double ucb_score(const gp::PosteriorView& post, const Point& x, double gamma);
[[nodiscard]] double ucb_score(double mean, double var, double gamma);

/// gamma_n = a ln(n + 1)
[[nodiscard]] double ucb_gamma(long n, double a = 2.0);

}  // namespace simopt::opt
