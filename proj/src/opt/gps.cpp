#include "simopt/opt/gps.hpp"

#include "simopt/stats.hpp"

#include <cmath>

namespace simopt::opt {

WeightFamily inverse_distance_weights(std::optional<double> power) {
  return [power](const Matrix& points, const Point& x) -> Vector {
    const auto n = points.rows();
    const double p = power.value_or(static_cast<double>(points.cols()) + 1.0);
    Vector dist(n);
    for (Eigen::Index i = 0; i < n; ++i) dist[i] = (points.row(i).transpose() - x).norm();
    Vector w = Vector::Zero(n);
    const double dmin = dist.minCoeff();
    if (dmin == 0.0) {
      for (Eigen::Index i = 0; i < n; ++i) w[i] = dist[i] == 0.0 ? 1.0 : 0.0;
    } else {
      // scaled by the nearest distance so nothing overflows
      for (Eigen::Index i = 0; i < n; ++i) w[i] = std::pow(dmin / dist[i], p);
    }
    return w / w.sum();
  };
}

GpsModel::GpsModel(gp::KernelPtr kernel, Matrix points, Vector ybar, Vector noise, WeightFamily weights)
    : kernel_(std::move(kernel)),
      points_(std::move(points)),
      ybar_(std::move(ybar)),
      noise_(std::move(noise)),
      weights_(std::move(weights)) {
  const auto n = points_.rows();
  if (n < 1) throw DomainError("GPS: no data");
  if (ybar_.size() != n || noise_.size() != n) throw DomainError("GPS: size mismatch");
  if ((noise_.array() < 0.0).any()) throw DomainError("GPS: negative noise variance");
  gram_ = kernel_->gram(points_);
  gram_.diagonal() += noise_;
  Matrix check(2 * n - 1, points_.cols());
  check.topRows(n) = points_;
  for (Eigen::Index i = 0; i + 1 < n; ++i) check.row(n + i) = 0.5 * (points_.row(i) + points_.row(i + 1));
  validate(check);
}

GpsModel::GpsModel(gp::KernelPtr kernel, const sim::Dataset& data, WeightFamily weights,
                   std::optional<double> noise_floor)
    : GpsModel(std::move(kernel), data.points(), data.means(), data.noise_variances(noise_floor), std::move(weights)) {}

void GpsModel::validate(const Matrix& validation) const {
  for (Eigen::Index r = 0; r < validation.rows(); ++r) {
    const Point x = validation.row(r).transpose();
    const Vector w = weights_(points_, x);
    if (w.size() != points_.rows()) throw DomainError("GPS weights: wrong length");
    if ((w.array() < 0.0).any() || !w.allFinite()) throw DomainError("GPS weights: negative or non-finite weight");
    if (std::abs(w.sum() - 1.0) > 1e-10) throw DomainError("GPS weights: do not sum to one");
    for (Eigen::Index i = 0; i < points_.rows(); ++i) {
      if ((points_.row(i).transpose() - x).norm() != 0.0) continue;
      // weight must sit on the copies of x
      double on = 0.0;
      for (Eigen::Index j = 0; j < points_.rows(); ++j) {
        if ((points_.row(j).transpose() - x).norm() == 0.0) on += w[j];
      }
      if (std::abs(on - 1.0) > 1e-10) throw DomainError("GPS weights: do not interpolate at a data point");
      break;
    }
  }
}

Vector GpsModel::weights(const Point& x) const { return weights_(points_, x); }

double GpsModel::mean_at(const Point& x) const { return weights(x).dot(ybar_); }

double GpsModel::raw_var_at(const Point& x) const {
  const Vector w = weights(x);
  const Vector k = kernel_->cross(points_, x);
  return (*kernel_)(x, x) - 2.0 * w.dot(k) + w.dot(gram_ * w);
}

double GpsModel::var_at(const Point& x) const { return std::max(0.0, raw_var_at(x)); }

Vector gps_tail_weights(const GpsModel& model, double c, const Matrix& grid) {
  Vector p(grid.rows());
  for (Eigen::Index i = 0; i < grid.rows(); ++i) {
    const Point x = grid.row(i).transpose();
    const double mu = model.mean_at(x);
    const double sd = std::sqrt(model.var_at(x));
    if (sd > 0.0) {
      p[i] = stats::normal_sf((c - mu) / sd);
    } else {
      p[i] = mu > c ? 1.0 : mu == c ? 0.5 : 0.0;
    }
  }
  return p;
}

GpsDensity normalize_density(const Vector& unnormalized) {
  if (unnormalized.size() == 0) throw DomainError("GPS density: empty grid");
  if ((unnormalized.array() < 0.0).any() || !unnormalized.allFinite()) {
    throw DomainError("GPS density: weights must be finite and nonnegative");
  }
  const double total = unnormalized.sum();
  if (total == 0.0) {
    return {Vector::Constant(unnormalized.size(), 1.0 / static_cast<double>(unnormalized.size())), true};
  }
  return {unnormalized / total, false};
}

GpsDensity gps_density(const GpsModel& model, double c, const Matrix& grid) {
  return normalize_density(gps_tail_weights(model, c, grid));
}

std::vector<Eigen::Index> gps_sample(const Vector& weights, const GpsSampler& sampler, int count, Engine& rng) {
  const auto n = weights.size();
  if (n == 0) throw DomainError("GPS sample: empty grid");
  if ((weights.array() < 0.0).any() || !weights.allFinite()) throw DomainError("GPS sample: bad weights");
  Eigen::Index top = 0;
  const double wmax = weights.maxCoeff(&top);
  if (!(wmax > 0.0)) throw DomainError("GPS sample: all weights are zero");
  std::vector<Eigen::Index> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  if (sampler.kind == GpsSamplerKind::acceptance_rejection) {
    if (weights.mean() / wmax < 1e-6) throw DomainError("GPS sample: acceptance rate below 1e-6 under the envelope");
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    while (static_cast<int>(out.size()) < count) {
      const auto i = pick(rng);
      if (unif(rng) * wmax < weights[i]) out.push_back(i);
    }
    return out;
  }

  if (n == 1) return std::vector<Eigen::Index>(static_cast<std::size_t>(count), 0);
  const bool local = sampler.width > 0 && 2 * static_cast<Eigen::Index>(sampler.width) + 1 < n;
  std::uniform_int_distribution<int> step(1, local ? 2 * sampler.width : static_cast<int>(n - 1));
  const int thin = std::max(sampler.thin, 1);
  auto state = top;
  const long total = static_cast<long>(sampler.burn_in) + static_cast<long>(count) * thin;
  for (long t = 1; t <= total; ++t) {
    Eigen::Index proposal;
    if (local) {
      int s = step(rng);
      s = s <= sampler.width ? s : sampler.width - s;  // +-1..width
      proposal = ((state + s) % n + n) % n;
    } else {
      proposal = (state + step(rng)) % n;
    }
    if (unif(rng) * weights[state] < weights[proposal]) state = proposal;
    if (t > sampler.burn_in && (t - sampler.burn_in) % thin == 0) out.push_back(state);
  }
  return out;
}

}  // namespace simopt::opt
