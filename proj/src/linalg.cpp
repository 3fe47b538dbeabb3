#include "simopt/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace simopt::linalg {

namespace {
std::atomic<std::uint64_t> g_factorizations{0};
std::atomic<std::uint64_t> g_max_block{0};

constexpr int kMaxJitterDoublings = 10;
constexpr double kJitterScale = 1e-10;
}  // namespace

Cholesky::Cholesky(const Matrix& a) {
  if (a.rows() != a.cols()) throw DomainError("Cholesky: matrix is not square");
  g_factorizations.fetch_add(1, std::memory_order_relaxed);
  const auto n = a.rows();
  if (n == 0) return;
  llt_.compute(a);
  if (llt_.info() == Eigen::Success && llt_.matrixLLT().diagonal().minCoeff() > 0.0) {
    lower_ = llt_.matrixL();
    return;
  }
  double base = a.trace() / static_cast<double>(n);
  if (!(base > 0.0) || !std::isfinite(base)) base = 1.0;
  double jitter = kJitterScale * base;
  for (int attempt = 0; attempt <= kMaxJitterDoublings; ++attempt, jitter *= 2.0) {
    Matrix shifted = a;
    shifted.diagonal().array() += jitter;
    llt_.compute(shifted);
    if (llt_.info() == Eigen::Success && llt_.matrixLLT().diagonal().minCoeff() > 0.0) {
      jitter_ = jitter;
      lower_ = llt_.matrixL();
      return;
    }
  }
  throw FactorizationError("Cholesky failed after jitter escalation (n=" + std::to_string(n) + ")");
}

Vector Cholesky::solve(const Vector& b) const { return llt_.solve(b); }
Matrix Cholesky::solve(const Matrix& b) const { return llt_.solve(b); }

Vector Cholesky::half_solve(const Vector& b) const {
  return lower_.triangularView<Eigen::Lower>().solve(b);
}
Matrix Cholesky::half_solve(const Matrix& b) const {
  return lower_.triangularView<Eigen::Lower>().solve(b);
}

double Cholesky::log_determinant() const {
  return 2.0 * lower_.diagonal().array().log().sum();
}

Vector lu_solve(const Matrix& a, const Vector& b) {
  Eigen::FullPivLU<Matrix> lu(a);
  if (!lu.isInvertible()) throw FactorizationError("LU: singular matrix");
  return lu.solve(b);
}

Matrix lu_solve(const Matrix& a, const Matrix& b) {
  Eigen::FullPivLU<Matrix> lu(a);
  if (!lu.isInvertible()) throw FactorizationError("LU: singular matrix");
  return lu.solve(b);
}

std::uint64_t factorization_count() { return g_factorizations.load(std::memory_order_relaxed); }

std::uint64_t max_recorded_block() { return g_max_block.load(std::memory_order_relaxed); }
void reset_max_recorded_block() { g_max_block.store(0, std::memory_order_relaxed); }

void note_allocation(Eigen::Index rows, Eigen::Index cols) {
  const auto block = static_cast<std::uint64_t>(rows) * static_cast<std::uint64_t>(cols);
  auto current = g_max_block.load(std::memory_order_relaxed);
  while (block > current && !g_max_block.compare_exchange_weak(current, block)) {
  }
}

Matrix tracked_matrix(Eigen::Index rows, Eigen::Index cols) {
  note_allocation(rows, cols);
  return Matrix(rows, cols);
}

void symmetrize(Matrix& a) {
  Matrix t = 0.5 * (a + a.transpose());
  a.swap(t);
}

}  // namespace simopt::linalg
