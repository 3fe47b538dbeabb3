#include "simopt/gp/posterior.hpp"

#include "simopt/numopt.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace simopt::gp {

MeanFunction MeanFunction::constant(double c) {
  MeanFunction m;
  m.kind_ = Kind::constant;
  m.c_ = c;
  return m;
}

MeanFunction MeanFunction::basis(Vector beta, surrogates::FeatureMapPtr features) {
  if (!features || features->size() != beta.size()) throw DomainError("basis mean: beta does not match the features");
  MeanFunction m;
  m.kind_ = Kind::basis;
  m.beta_ = std::move(beta);
  m.features_ = std::move(features);
  return m;
}

MeanFunction MeanFunction::stylized(surrogates::Stylized psi, double scale, std::string name) {
  if (!psi) throw DomainError("stylized mean: null psi");
  MeanFunction m;
  m.kind_ = Kind::stylized;
  m.psi_ = std::move(psi);
  m.c_ = scale;
  m.psi_name_ = std::move(name);
  return m;
}

double MeanFunction::operator()(const Point& x) const {
  switch (kind_) {
    case Kind::constant:
      return c_;
    case Kind::basis:
      return beta_.dot(features_->evaluate(x));
    case Kind::stylized:
      return c_ * psi_(x);
  }
  return 0.0;
}

Vector MeanFunction::at(const Matrix& points) const {
  if (kind_ == Kind::constant) return Vector::Constant(points.rows(), c_);
  Vector out(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) out[i] = (*this)(points.row(i).transpose());
  return out;
}

MeanFunction MeanFunction::with_constant(double c) const {
  if (kind_ == Kind::basis) throw CapabilityError("basis mean has no single constant");
  MeanFunction m = *this;
  m.c_ = c;
  return m;
}

KvDoc MeanFunction::describe() const {
  KvDoc doc;
  switch (kind_) {
    case Kind::constant:
      doc.set("kind", "constant");
      doc.set("c", c_);
      break;
    case Kind::basis:
      doc.set("kind", "basis");
      doc.set("beta", beta_);
      doc.merge("features", features_->describe());
      break;
    case Kind::stylized:
      doc.set("kind", "stylized");
      doc.set("scale", c_);
      doc.set("psi", psi_name_);
      break;
  }
  return doc;
}

Vector PosteriorView::mean_at(const Matrix& points) const {
  Vector out(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) out[i] = mean_at(Point(points.row(i).transpose()));
  return out;
}

Matrix PosteriorView::cov_matrix(const Matrix& points) const {
  const auto q = points.rows();
  Matrix c(q, q);
  for (Eigen::Index i = 0; i < q; ++i) {
    const Point xi = points.row(i).transpose();
    for (Eigen::Index j = i; j < q; ++j) {
      c(i, j) = cov_at(xi, points.row(j).transpose());
      c(j, i) = c(i, j);
    }
  }
  return c;
}

double clamp_variance(double v, double prior_var) {
  if (v >= 0.0) return v;
  if (v >= -1e-8 * std::abs(prior_var)) return 0.0;
  throw DomainError("posterior variance " + format_double(v) + " is negative beyond rounding tolerance");
}

GpPosterior::GpPosterior(GpPrior prior, const sim::Dataset& data, std::optional<double> noise_floor)
    : prior_(std::move(prior)), points_(data.points()), y_(data.means()), noise_(data.noise_variances(noise_floor)) {
  build();
}

GpPosterior::GpPosterior(GpPrior prior, Matrix points, Vector y, Vector noise)
    : prior_(std::move(prior)), points_(std::move(points)), y_(std::move(y)), noise_(std::move(noise)) {
  build();
}

void GpPosterior::build() {
  if (!prior_.kernel) throw DomainError("posterior: prior has no kernel");
  if (points_.rows() != y_.size() || y_.size() != noise_.size()) throw DomainError("posterior: size mismatch");
  if (points_.rows() > 0 && noise_.minCoeff() < 0.0) throw DomainError("posterior: negative noise variance");
  Matrix k = prior_.kernel->gram(points_);
  k.diagonal() += noise_;
  chol_ = linalg::Cholesky(k);
  prior_mean_ = prior_.mean.at(points_);
  weights_ = points_.rows() > 0 ? chol_.solve(Vector(y_ - prior_mean_)) : Vector(0);
}

double GpPosterior::mean_at(const Point& x) const {
  if (points_.rows() == 0) return prior_.mean(x);
  return prior_.mean(x) + prior_.kernel->cross(points_, x).dot(weights_);
}

double GpPosterior::cov_at(const Point& x, const Point& y) const {
  const double kxy = (*prior_.kernel)(x, y);
  if (points_.rows() == 0) return kxy;
  const Vector vx = chol_.half_solve(prior_.kernel->cross(points_, x));
  const Vector vy = chol_.half_solve(prior_.kernel->cross(points_, y));
  return kxy - vx.dot(vy);
}

double GpPosterior::raw_var_at(const Point& x) const {
  const double kxx = prior_.kernel->variance_at(x);
  if (points_.rows() == 0) return kxx;
  return kxx - chol_.half_solve(prior_.kernel->cross(points_, x)).squaredNorm();
}

double GpPosterior::var_at(const Point& x) const { return clamp_variance(raw_var_at(x), prior_var_at(x)); }

void GpPosterior::predict(const Matrix& points, Vector& mean, Vector& var) const {
  const auto q = points.rows();
  mean = prior_.mean.at(points);
  var.resize(q);
  for (Eigen::Index i = 0; i < q; ++i) var[i] = prior_.kernel->variance_at(points.row(i).transpose());
  if (points_.rows() == 0) return;
  const Matrix kx = prior_.kernel->cross(points_, points);
  mean += kx.transpose() * weights_;
  const Matrix v = chol_.half_solve(kx);
  const Vector reduction = v.colwise().squaredNorm().transpose();
  for (Eigen::Index i = 0; i < q; ++i) var[i] = clamp_variance(var[i] - reduction[i], var[i]);
}

UpdatedPosterior::UpdatedPosterior(std::shared_ptr<const PosteriorView> base, Point x_next, double y_next,
                                   double noise_next)
    : base_(std::move(base)), x_next_(std::move(x_next)) {
  if (!base_) throw DomainError("kg_update: null posterior");
  if (!(noise_next >= 0.0)) throw DomainError("kg_update: noise variance must be nonnegative");
  const double denom = base_->cov_at(x_next_, x_next_) + noise_next;
  if (!(denom > 0.0)) throw DomainError("kg_update: K_n(x_next, x_next) + noise is not positive");
  scale_ = std::sqrt(denom);
  z_ = (y_next - base_->mean_at(x_next_)) / scale_;
}

double UpdatedPosterior::delta(const Point& x) const { return base_->cov_at(x, x_next_) / scale_; }

double UpdatedPosterior::mean_at(const Point& x) const { return base_->mean_at(x) + delta(x) * z_; }

double UpdatedPosterior::cov_at(const Point& x, const Point& y) const {
  return base_->cov_at(x, y) - delta(x) * delta(y);
}

double UpdatedPosterior::var_at(const Point& x) const { return clamp_variance(cov_at(x, x), prior_var_at(x)); }

std::shared_ptr<const UpdatedPosterior> kg_update(std::shared_ptr<const PosteriorView> post, const Point& x_next,
                                                 double y_next, double noise_next) {
  return std::make_shared<UpdatedPosterior>(std::move(post), x_next, y_next, noise_next);
}

double log_marginal_likelihood(const GpPrior& prior, const Matrix& points, const Vector& y, const Vector& noise) {
  const auto n = points.rows();
  Matrix k = prior.kernel->gram(points);
  k.diagonal() += noise;
  const linalg::Cholesky chol(k);
  const Vector r = y - prior.mean.at(points);
  const double quad = chol.half_solve(r).squaredNorm();
  return -0.5 * quad - 0.5 * chol.log_determinant() - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

double log_marginal_likelihood(const GpPrior& prior, const sim::Dataset& data, std::optional<double> noise_floor) {
  return log_marginal_likelihood(prior, data.points(), data.means(), data.noise_variances(noise_floor));
}

Eigen::Index PriorFamily::size() const { return kernel->log_params().size() + (fit_constant_mean ? 1 : 0); }

std::vector<std::string> PriorFamily::names() const {
  auto names = kernel->param_names();
  for (auto& n : names) n = "log_" + n;
  if (fit_constant_mean) names.emplace_back("mean_c");
  return names;
}

Vector PriorFamily::initial() const {
  Vector t(size());
  const Vector kp = kernel->log_params();
  t.head(kp.size()) = kp;
  if (fit_constant_mean) t[kp.size()] = mean.constant_value();
  return t;
}

GpPrior PriorFamily::build(const Vector& theta) const {
  if (theta.size() != size()) throw DomainError("prior family: wrong number of hyperparameters");
  const auto nk = kernel->log_params().size();
  GpPrior p;
  p.kernel = nk > 0 ? kernel->with_log_params(theta.head(nk)) : kernel;
  p.mean = fit_constant_mean ? mean.with_constant(theta[nk]) : mean;
  return p;
}

HyperBounds stationary_bounds(double tau_lo, double tau_hi, double eta_lo, double eta_hi,
                              std::optional<std::pair<double, double>> mean_range) {
  if (!(tau_lo > 0.0 && tau_lo <= tau_hi && eta_lo > 0.0 && eta_lo <= eta_hi)) {
    throw DomainError("hyperparameter bounds must be positive and ordered");
  }
  const Eigen::Index n = mean_range ? 3 : 2;
  HyperBounds b{Vector(n), Vector(n)};
  b.lower[0] = std::log(tau_lo);
  b.upper[0] = std::log(tau_hi);
  b.lower[1] = std::log(eta_lo);
  b.upper[1] = std::log(eta_hi);
  if (mean_range) {
    b.lower[2] = mean_range->first;
    b.upper[2] = mean_range->second;
  }
  return b;
}

HyperFit fit_hyperparameters(const PriorFamily& family, const Matrix& points, const Vector& y, const Vector& noise,
                             const HyperBounds& bounds, Engine& rng, const HyperFitOptions& options) {
  const auto p = family.size();
  if (bounds.lower.size() != p || bounds.upper.size() != p) throw DomainError("fit_hyperparameters: bounds size");
  for (Eigen::Index j = 0; j < p; ++j) {
    if (!std::isfinite(bounds.lower[j]) || !std::isfinite(bounds.upper[j]) || bounds.lower[j] > bounds.upper[j]) {
      throw DomainError("fit_hyperparameters: bounds must be finite and ordered");
    }
  }
  if (options.restarts < 1) throw DomainError("fit_hyperparameters: restarts must be >= 1");
  const Box box{bounds.lower, bounds.upper};
  auto objective = [&](const Vector& theta) {
    return log_marginal_likelihood(family.build(theta), points, y, noise);
  };
  auto safe = [&](const Vector& theta) {
    try {
      const double v = objective(theta);
      return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
    } catch (const Error&) {
      return -std::numeric_limits<double>::infinity();
    }
  };

  const Matrix lhs = numopt::latin_hypercube(options.restarts, box, rng);
  HyperFit fit;
  fit.log_likelihood = -std::numeric_limits<double>::infinity();
  numopt::BfgsOptions bfgs;
  bfgs.max_iterations = options.max_iterations;
  bfgs.fd_step = 1e-4;
  for (int s = 0; s < options.restarts; ++s) {
    Vector start = lhs.row(s).transpose();
    if (s == 0 && options.extra_start) start = box.project(*options.extra_start);
    const double v0 = safe(start);
    fit.starts.push_back(start);
    fit.start_values.push_back(v0);
    Vector best_x = start;
    double best_v = v0;
    if (std::isfinite(v0)) {
      const auto r = numopt::maximize_box(objective, start, box, bfgs);
      if (r.value > best_v) {
        best_v = r.value;
        best_x = r.x;
      }
    }
    fit.local_values.push_back(best_v);
    if (best_v > fit.log_likelihood) {
      fit.log_likelihood = best_v;
      fit.theta = best_x;
    }
  }
  if (!std::isfinite(fit.log_likelihood)) {
    throw FactorizationError("fit_hyperparameters: every start failed to factorize");
  }
  fit.prior = family.build(fit.theta);
  return fit;
}

HyperFit fit_hyperparameters(const PriorFamily& family, const sim::Dataset& data, const HyperBounds& bounds,
                             Engine& rng, const HyperFitOptions& options, std::optional<double> noise_floor) {
  return fit_hyperparameters(family, data.points(), data.means(), data.noise_variances(noise_floor), bounds, rng,
                             options);
}

}  // namespace simopt::gp
