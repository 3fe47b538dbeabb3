#pragma once

#include "simopt/common.hpp"

#include <atomic>
#include <cstdint>

namespace simopt::linalg {

/// Cholesky factor of a symmetric matrix, possibly with diagonal jitter added.
///
/// Jitter starts at 1e-10 * trace / n and doubles at most ten times; if the
/// matrix is still not positive definite a FactorizationError is thrown.
class Cholesky {
 public:
  Cholesky() = default;
  explicit Cholesky(const Matrix& a);

  [[nodiscard]] Eigen::Index size() const { return llt_.rows(); }
  [[nodiscard]] double jitter() const { return jitter_; }
  [[nodiscard]] const Matrix& lower() const { return lower_; }

  [[nodiscard]] Vector solve(const Vector& b) const;
  [[nodiscard]] Matrix solve(const Matrix& b) const;
  /// L^{-1} b
  [[nodiscard]] Vector half_solve(const Vector& b) const;
  [[nodiscard]] Matrix half_solve(const Matrix& b) const;
  [[nodiscard]] double log_determinant() const;

 private:
  Eigen::LLT<Matrix> llt_;
  Matrix lower_;
  double jitter_ = 0.0;
};

/// Solve a general square system by LU with full pivoting; throws FactorizationError if singular.
[[nodiscard]] Vector lu_solve(const Matrix& a, const Vector& b);
[[nodiscard]] Matrix lu_solve(const Matrix& a, const Matrix& b);

/// Number of Cholesky factorizations performed by this process.
[[nodiscard]] std::uint64_t factorization_count();

/// Largest rows*cols block recorded through note_allocation().
[[nodiscard]] std::uint64_t max_recorded_block();
void reset_max_recorded_block();
void note_allocation(Eigen::Index rows, Eigen::Index cols);

/// Allocates an uninitialized matrix and records its size with note_allocation().
[[nodiscard]] Matrix tracked_matrix(Eigen::Index rows, Eigen::Index cols);

/// Symmetrize in place: a <- (a + a^T) / 2.
void symmetrize(Matrix& a);

}  // namespace simopt::linalg
