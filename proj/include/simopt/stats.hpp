#pragma once

#include <cmath>
#include <numbers>
#include <span>

namespace simopt::stats {

[[nodiscard]] inline double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

[[nodiscard]] inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// P(Z > z) for standard normal Z, accurate in the far tail.
[[nodiscard]] inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

struct MeanVar {
  double mean = 0.0;
  double variance = 0.0;  ///< unbiased; 0 when fewer than two values
  std::size_t count = 0;
};

[[nodiscard]] MeanVar mean_var(std::span<const double> values);

/// Upper alpha quantile of Student's t with `dof` degrees of freedom.
[[nodiscard]] double student_t_upper(double alpha, double dof);

/// Upper alpha quantile of the F distribution.
[[nodiscard]] double fisher_f_upper(double alpha, double dof1, double dof2);

/// Upper alpha quantile of chi-square.
[[nodiscard]] double chi_square_upper(double alpha, double dof);

/// One-sided Welch test of H1: mean(a) > mean(b). Returns true when H0 is rejected at `alpha`.
/// With zero sample variance in both groups the decision reduces to mean(a) > mean(b).
[[nodiscard]] bool welch_greater(const MeanVar& a, const MeanVar& b, double alpha);

}  // namespace simopt::stats
