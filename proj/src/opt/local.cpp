#include "simopt/opt/local.hpp"

#include "simopt/surrogates/linear.hpp"

#include <bit>
#include <cmath>

namespace simopt::opt {

Matrix two_level_design(Eigen::Index d, bool fractional) {
  if (d < 1) throw DomainError("two-level design: d must be positive");
  Eigen::Index k = d;
  if (fractional) {
    k = 1;
    while ((Eigen::Index{1} << k) < d + 1) ++k;
    k = std::min(k, d);
  }
  const Eigen::Index runs = Eigen::Index{1} << k;
  // generators: subsets of the base columns with at least two members, smallest first
  std::vector<Eigen::Index> generators;
  for (Eigen::Index size = 2; size <= k && static_cast<Eigen::Index>(generators.size()) < d - k; ++size) {
    for (Eigen::Index mask = 0; mask < runs; ++mask) {
      if (std::popcount(static_cast<unsigned long long>(mask)) == size) generators.push_back(mask);
      if (static_cast<Eigen::Index>(generators.size()) == d - k) break;
    }
  }
  Matrix design(runs, d);
  for (Eigen::Index r = 0; r < runs; ++r) {
    for (Eigen::Index j = 0; j < k; ++j) design(r, j) = (r >> j) & 1 ? 1.0 : -1.0;
    for (Eigen::Index g = 0; g < d - k; ++g) {
      double v = 1.0;
      for (Eigen::Index j = 0; j < k; ++j) {
        if ((generators[static_cast<std::size_t>(g)] >> j) & 1) v *= design(r, j);
      }
      design(r, k + g) = v;
    }
  }
  return design;
}

Matrix central_composite(Eigen::Index d, double alpha, int centers) {
  const Matrix fact = two_level_design(d, d > 5);
  Matrix ccd = Matrix::Zero(fact.rows() + 2 * d + std::max(centers, 0), d);
  ccd.topRows(fact.rows()) = fact;
  for (Eigen::Index j = 0; j < d; ++j) {
    ccd(fact.rows() + 2 * j, j) = alpha;
    ccd(fact.rows() + 2 * j + 1, j) = -alpha;
  }
  return ccd;
}

LocalModel fit_local_model(const Matrix& offsets, const Vector& y, int order) {
  const auto d = offsets.cols();
  double scale = offsets.cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) scale = 1.0;
  const auto sur = surrogates::fit_ols(surrogates::polynomial_features(d, order), offsets / scale, y);
  const Vector& beta = sur.beta;
  LocalModel m;
  m.b0 = beta[0];
  m.g = beta.segment(1, d) / scale;
  m.h = Matrix::Zero(d, d);
  if (order == 2) {
    Eigen::Index k = 1 + d;
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = i; j < d; ++j, ++k) {
        if (i == j) {
          m.h(i, i) = 2.0 * beta[k];
        } else {
          m.h(i, j) = m.h(j, i) = beta[k];
        }
      }
    }
    m.h /= scale * scale;
  }
  return m;
}

Vector trust_region_step(const Vector& g, const Matrix& h, double radius) {
  const auto d = g.size();
  if (!(radius > 0.0)) throw DomainError("trust region: radius must be positive");
  // minimize c^T s + s^T B s / 2 with c = -g, B = -H
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(-0.5 * (h + h.transpose()));
  const Vector lam = eig.eigenvalues();
  const Matrix& q = eig.eigenvectors();
  const Vector c = q.transpose() * (-g);
  const double cnorm = c.norm();
  const double tol = 1e-12 * std::max(1.0, lam.cwiseAbs().maxCoeff());
  auto step_norm = [&](double shift) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      const double den = lam[i] + shift;
      if (den > 0.0) s += c[i] * c[i] / (den * den);
    }
    return std::sqrt(s);
  };
  auto step_at = [&](double shift) {
    Vector s = Vector::Zero(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      const double den = lam[i] + shift;
      if (den > 0.0) s[i] = -c[i] / den;
    }
    return s;
  };

  if (cnorm == 0.0 && lam[0] >= -tol) return Vector::Zero(d);
  if (lam[0] > tol && step_norm(0.0) <= radius) return q * step_at(0.0);

  const double lo = std::max(0.0, -lam[0]);
  // hard case: no gradient component along the most negative curvature directions
  double along_min = 0.0;
  for (Eigen::Index i = 0; i < d && lam[i] <= lam[0] + tol; ++i) along_min += c[i] * c[i];
  if (std::sqrt(along_min) <= 1e-12 * std::max(cnorm, 1e-300) || cnorm == 0.0) {
    Vector s = Vector::Zero(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      if (lam[i] > lam[0] + tol) s[i] = -c[i] / (lam[i] + lo);
    }
    const double rest = radius * radius - s.squaredNorm();
    if (rest >= 0.0) {
      s[0] += std::sqrt(rest);
      return q * s;
    }
  }
  double a = lo;
  double b = lo + cnorm / radius + 1.0;
  while (step_norm(b) > radius) b = lo + 2.0 * (b - lo);
  for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, b); ++it) {
    const double mid = 0.5 * (a + b);
    if (step_norm(mid) > radius) {
      a = mid;
    } else {
      b = mid;
    }
  }
  Vector s = step_at(b);
  const double norm = s.norm();
  if (norm > radius) s *= radius / norm;
  return q * s;
}

}  // namespace simopt::opt
