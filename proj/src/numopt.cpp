#include "simopt/numopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace simopt::numopt {

Matrix latin_hypercube(Eigen::Index n, const Box& box, Engine& rng) {
  const auto d = box.dim();
  Matrix x(n, d);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < d; ++j) {
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double t = (static_cast<double>(perm[static_cast<std::size_t>(i)]) + u(rng)) / static_cast<double>(n);
      x(i, j) = box.lower[j] + t * (box.upper[j] - box.lower[j]);
    }
  }
  return x;
}

Matrix uniform_points(Eigen::Index n, const Box& box, Engine& rng) {
  Matrix x(n, box.dim());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < box.dim(); ++j) x(i, j) = box.lower[j] + u(rng) * (box.upper[j] - box.lower[j]);
  }
  return x;
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Counted {
  const Objective& f;
  int evaluations = 0;
  double operator()(const Vector& x) {
    ++evaluations;
    try {
      const double v = f(x);
      return std::isnan(v) ? kNegInf : v;
    } catch (const Error&) {
      return kNegInf;
    }
  }
};

Vector fd_gradient(Counted& f, const Vector& x, double fx, const Box& box, const Vector& h) {
  Vector g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (h[j] <= 0.0) {
      g[j] = 0.0;
      continue;
    }
    Vector xp = x;
    Vector xm = x;
    xp[j] = std::min(x[j] + h[j], box.upper[j]);
    xm[j] = std::max(x[j] - h[j], box.lower[j]);
    const double fp = xp[j] == x[j] ? fx : f(xp);
    const double fm = xm[j] == x[j] ? fx : f(xm);
    const double span = xp[j] - xm[j];
    if (span <= 0.0 || !std::isfinite(fp) || !std::isfinite(fm)) {
      g[j] = 0.0;
    } else {
      g[j] = (fp - fm) / span;
    }
  }
  return g;
}

/// Components whose bound is active and whose gradient points outward are frozen.
std::vector<bool> active_set(const Vector& x, const Vector& g, const Box& box) {
  std::vector<bool> frozen(static_cast<std::size_t>(x.size()), false);
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double w = box.upper[j] - box.lower[j];
    const double eps = 1e-12 * std::max(1.0, w);
    if (w <= 0.0 || (x[j] >= box.upper[j] - eps && g[j] > 0.0) || (x[j] <= box.lower[j] + eps && g[j] < 0.0)) {
      frozen[static_cast<std::size_t>(j)] = true;
    }
  }
  return frozen;
}

}  // namespace

MaxResult maximize_box(const Objective& f, Vector x0, const Box& box, const BfgsOptions& options) {
  Counted eval{f};
  const auto d = x0.size();
  Vector x = box.project(x0);
  double fx = eval(x);
  const Vector h = options.fd_step * box.width().cwiseMax(0.0);
  if (!std::isfinite(fx)) return {x, fx, eval.evaluations};

  Matrix hinv = Matrix::Identity(d, d);
  Vector g = fd_gradient(eval, x, fx, box, h);
  for (int it = 0; it < options.max_iterations; ++it) {
    const auto frozen = active_set(x, g, box);
    Vector pg = g;
    for (Eigen::Index j = 0; j < d; ++j) {
      if (frozen[static_cast<std::size_t>(j)]) pg[j] = 0.0;
    }
    if (pg.norm() < options.gradient_tol) break;

    Vector dir = hinv * pg;
    for (Eigen::Index j = 0; j < d; ++j) {
      if (frozen[static_cast<std::size_t>(j)]) dir[j] = 0.0;
    }
    if (dir.dot(pg) <= 0.0) {
      hinv.setIdentity();
      dir = pg;
    }
    // Cap the first trial step at the box width.
    double t = 1.0;
    const double max_len = box.diagonal();
    if (max_len > 0.0 && dir.norm() > max_len) t = max_len / dir.norm();

    Vector xn;
    double fn = kNegInf;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
      xn = box.project(x + t * dir);
      fn = eval(xn);
      if (std::isfinite(fn) && fn >= fx + 1e-4 * pg.dot(xn - x)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    const Vector gn = fd_gradient(eval, xn, fn, box, h);
    const Vector s = xn - x;
    const Vector yv = -(gn - g);
    const double sy = s.dot(yv);
    const double change = fn - fx;
    x = xn;
    fx = fn;
    g = gn;
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      const double rho = 1.0 / sy;
      const Matrix id = Matrix::Identity(d, d);
      hinv = (id - rho * s * yv.transpose()) * hinv * (id - rho * yv * s.transpose()) + rho * s * s.transpose();
    }
    if (std::abs(change) <= options.value_tol * std::max(1.0, std::abs(fx))) break;
  }
  return {x, fx, eval.evaluations};
}

MaxResult pattern_search_max(const Objective& f, Vector x0, const Box& box, double initial_step, double min_step,
                             int max_evaluations) {
  Counted eval{f};
  Vector x = box.project(x0);
  double fx = eval(x);
  double step = initial_step;
  while (step >= min_step && eval.evaluations < max_evaluations) {
    bool improved = false;
    for (Eigen::Index j = 0; j < x.size() && !improved; ++j) {
      for (double sign : {1.0, -1.0}) {
        Vector xn = x;
        xn[j] += sign * step;
        xn = box.project(xn);
        if (xn == x) continue;
        const double fn = eval(xn);
        if (fn > fx) {
          x = xn;
          fx = fn;
          improved = true;
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return {x, fx, eval.evaluations};
}

}  // namespace simopt::numopt
