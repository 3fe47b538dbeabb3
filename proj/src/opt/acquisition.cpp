#include "simopt/opt/acquisition.hpp"

#include "simopt/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace simopt::opt {

double expected_max_gain(const Vector& a, const Vector& b) {
  if (a.size() != b.size() || a.size() == 0) throw DomainError("expected_max_gain: bad sizes");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(a.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    return b[i] < b[j] || (b[i] == b[j] && a[i] < a[j]);
  });
  // Lines kept on the envelope, with the Z at which each one takes over.
  std::vector<Eigen::Index> hull;
  std::vector<double> enter;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto i = order[k];
    if (k + 1 < order.size() && b[order[k + 1]] == b[i]) continue;  // same slope, larger intercept follows
    while (true) {
      if (hull.empty()) {
        hull.push_back(i);
        enter.push_back(-std::numeric_limits<double>::infinity());
        break;
      }
      const auto j = hull.back();
      const double c = (a[j] - a[i]) / (b[i] - b[j]);
      if (c <= enter.back()) {
        hull.pop_back();
        enter.pop_back();
        continue;
      }
      hull.push_back(i);
      enter.push_back(c);
      break;
    }
  }
  double sum = 0.0;
  for (std::size_t k = 1; k < hull.size(); ++k) {
    const double z = -std::abs(enter[k]);
    sum += (b[hull[k]] - b[hull[k - 1]]) * (z * stats::normal_cdf(z) + stats::normal_pdf(z));
  }
  return sum;
}

KgProxy::KgProxy(const gp::GpPosterior& post, Matrix set) : post_(&post), set_(std::move(set)) {
  const auto& kernel = *post.prior().kernel;
  mean_ = post.mean_at(set_);
  half_ = post.factor().half_solve(kernel.cross(post.points(), set_));
}

void KgProxy::lines(const Point& x, double noise, Vector& a, Vector& b) const {
  const auto& kernel = *post_->prior().kernel;
  const Vector hx = post_->factor().half_solve(kernel.cross(post_->points(), x));
  const double var_x = std::max(0.0, kernel(x, x) - hx.squaredNorm());
  const double denom = var_x + noise;
  if (!(denom > 0.0) || !std::isfinite(denom)) throw DomainError("KG: K_n(x,x) + noise must be positive");
  const double scale = std::sqrt(denom);
  const auto q = set_.rows();
  a.resize(q + 1);
  b.resize(q + 1);
  a.head(q) = mean_;
  a[q] = post_->mean_at(x);
  const Vector kx = kernel.cross(set_, x);
  b.head(q) = (kx - half_.transpose() * hx) / scale;
  b[q] = var_x / scale;
}

double KgProxy::score(const Point& x, double noise) const {
  Vector a, b;
  lines(x, noise, a, b);
  return expected_max_gain(a, b);
}

double KgProxy::score_saa(const Point& x, double noise, int samples, Engine& rng) const {
  if (samples < 1) throw DomainError("KG SAA: samples must be at least 1");
  Vector a, b;
  lines(x, noise, a, b);
  const double base = a.maxCoeff();
  std::normal_distribution<double> normal;
  double sum = 0.0;
  for (int s = 0; s < samples; ++s) {
    const double z = normal(rng);
    sum += (a + z * b).maxCoeff() - base;
  }
  return sum / samples;
}

double kg_score_discrete(const gp::GpPosterior& post, const Matrix& set, const Point& x, double noise) {
  return KgProxy(post, set).score(x, noise);
}

double kg_score_saa(const gp::GpPosterior& post, const Point& x, double noise, const Matrix& grid, int samples,
                    Engine& rng) {
  return KgProxy(post, grid).score_saa(x, noise, samples, rng);
}

double ucb_score(double mean, double var, double gamma) {
  if (!(gamma >= 0.0)) throw DomainError("UCB: gamma must be nonnegative");
  return mean + std::sqrt(gamma * std::max(var, 0.0));
}

double ucb_score(const gp::PosteriorView& post, const Point& x, double gamma) {
  return ucb_score(post.mean_at(x), post.cov_at(x, x), gamma);
}

double ucb_gamma(long n, double a) { return a * std::log(static_cast<double>(n) + 1.0); }

}  // namespace simopt::opt
