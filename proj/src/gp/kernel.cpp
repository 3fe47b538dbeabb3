#include "simopt/gp/kernel.hpp"

#include "simopt/surrogates/features.hpp"

#include <cmath>

namespace simopt::gp {

Matrix Kernel::cross(const Matrix& x, const Matrix& y) const {
  Matrix out(x.rows(), y.rows());
  for (Eigen::Index j = 0; j < y.rows(); ++j) {
    const Point yj = y.row(j).transpose();
    for (Eigen::Index i = 0; i < x.rows(); ++i) out(i, j) = (*this)(x.row(i).transpose(), yj);
  }
  return out;
}

Vector Kernel::cross(const Matrix& x, const Point& y) const {
  Vector out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = (*this)(x.row(i).transpose(), y);
  return out;
}

Matrix Kernel::gram(const Matrix& x) const {
  Matrix k = cross(x, x);
  // Mirror the upper triangle so symmetry holds bit for bit.
  for (Eigen::Index j = 0; j < k.cols(); ++j) {
    for (Eigen::Index i = j + 1; i < k.rows(); ++i) k(i, j) = k(j, i);
  }
  return k;
}

KernelPtr Kernel::with_log_params(const Vector& theta) const {
  if (theta.size() != 0) throw DomainError("kernel '" + kind() + "' has no hyperparameters");
  throw CapabilityError("kernel '" + kind() + "' cannot be rebuilt from hyperparameters");
}

KvDoc Kernel::describe() const {
  KvDoc doc;
  doc.set("kind", kind());
  return doc;
}

StationaryKernel::StationaryKernel(double tau, double eta) : tau_(tau), eta_(eta) {
  if (!(tau > 0.0) || !(eta > 0.0) || !std::isfinite(tau) || !std::isfinite(eta)) {
    throw DomainError("kernel: tau and eta must be positive and finite");
  }
}

double StationaryKernel::operator()(const Point& x, const Point& y) const {
  if (x.size() != y.size()) throw DomainError("kernel: dimension mismatch");
  return profile((x - y).norm());
}

Matrix StationaryKernel::cross(const Matrix& x, const Matrix& y) const {
  if (x.cols() != y.cols()) throw DomainError("kernel: dimension mismatch");
  const Matrix xt = x.transpose();
  const Matrix yt = y.transpose();
  Matrix out(x.rows(), y.rows());
  for (Eigen::Index j = 0; j < y.rows(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) out(i, j) = profile((xt.col(i) - yt.col(j)).norm());
  }
  return out;
}

Vector StationaryKernel::cross(const Matrix& x, const Point& y) const {
  if (x.cols() != y.size()) throw DomainError("kernel: dimension mismatch");
  Vector out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = profile((x.row(i).transpose() - y).norm());
  return out;
}

Vector StationaryKernel::log_params() const {
  Vector t(2);
  t << std::log(tau_), std::log(eta_);
  return t;
}

double GaussianKernel::profile(double r) const {
  const double s = r / eta_;
  return tau_ * tau_ * std::exp(-0.5 * s * s);
}

KernelPtr GaussianKernel::with_log_params(const Vector& theta) const {
  if (theta.size() != 2) throw DomainError("gaussian kernel expects 2 hyperparameters");
  return std::make_shared<GaussianKernel>(std::exp(theta[0]), std::exp(theta[1]));
}

KvDoc GaussianKernel::describe() const {
  KvDoc doc;
  doc.set("kind", "gaussian");
  doc.set("tau", tau_);
  doc.set("eta", eta_);
  return doc;
}

MaternKernel::MaternKernel(double tau, double eta, int two_nu) : StationaryKernel(tau, eta), two_nu_(two_nu) {
  if (two_nu != 1 && two_nu != 3 && two_nu != 5) throw DomainError("matern: nu must be 1/2, 3/2 or 5/2");
}

double MaternKernel::profile(double r) const {
  const double t2 = tau_ * tau_;
  const double s = r / eta_;
  switch (two_nu_) {
    case 1:
      return t2 * std::exp(-s);
    case 3: {
      const double a = std::sqrt(3.0) * s;
      return t2 * (1.0 + a) * std::exp(-a);
    }
    default: {
      const double a = std::sqrt(5.0) * s;
      return t2 * (1.0 + a + 5.0 * s * s / 3.0) * std::exp(-a);
    }
  }
}

KernelPtr MaternKernel::with_log_params(const Vector& theta) const {
  if (theta.size() != 2) throw DomainError("matern kernel expects 2 hyperparameters");
  return std::make_shared<MaternKernel>(std::exp(theta[0]), std::exp(theta[1]), two_nu_);
}

KvDoc MaternKernel::describe() const {
  KvDoc doc;
  doc.set("kind", "matern");
  doc.set("tau", tau_);
  doc.set("eta", eta_);
  doc.set("nu", nu());
  return doc;
}

double ibf_integral(double a, double b, int m) {
  const double s = std::min(a, b);
  if (s <= 0.0) return 0.0;
  // (a-u)^m (b-u)^m as a polynomial in u, integrated term by term over [0, s].
  auto binom_poly = [m](double c) {
    std::vector<double> p(static_cast<std::size_t>(m) + 1);
    double coef = 1.0;
    for (int k = 0; k <= m; ++k) {
      p[static_cast<std::size_t>(k)] = coef * std::pow(c, m - k) * ((k % 2) ? -1.0 : 1.0);
      coef = coef * (m - k) / (k + 1);
    }
    return p;
  };
  const auto pa = binom_poly(a);
  const auto pb = binom_poly(b);
  double total = 0.0;
  for (int i = 0; i <= m; ++i) {
    for (int j = 0; j <= m; ++j) {
      const int k = i + j;
      total += pa[static_cast<std::size_t>(i)] * pb[static_cast<std::size_t>(j)] * std::pow(s, k + 1) / (k + 1);
    }
  }
  return total;
}

GibfKernel::GibfKernel(std::vector<int> m, std::vector<Vector> theta) : m_(std::move(m)), theta_(std::move(theta)) {
  if (m_.empty() || m_.size() != theta_.size()) throw DomainError("gibf: need one order and one theta per dimension");
  for (std::size_t j = 0; j < m_.size(); ++j) {
    if (m_[j] < 0 || m_[j] > 2) throw DomainError("gibf: orders must be 0, 1 or 2");
    if (theta_[j].size() != m_[j] + 2) throw DomainError("gibf: theta_j must have m_j + 2 entries");
    if (!(theta_[j].minCoeff() > 0.0)) throw DomainError("gibf: theta entries must be positive");
  }
}

double GibfKernel::component(std::size_t j, double a, double b) const {
  const int m = m_[j];
  const Vector& th = theta_[j];
  double value = 0.0;
  double fact = 1.0;
  double power = 1.0;
  for (int l = 0; l <= m; ++l) {
    if (l > 0) {
      fact *= l;
      power *= a * b;
    }
    value += th[l] * power / (fact * fact);
  }
  return value + th[m + 1] * ibf_integral(a, b, m) / (fact * fact);
}

double GibfKernel::operator()(const Point& x, const Point& y) const {
  const auto d = static_cast<Eigen::Index>(m_.size());
  if (x.size() != d || y.size() != d) throw DomainError("gibf: dimension mismatch");
  if (x.minCoeff() < 0.0 || y.minCoeff() < 0.0) throw DomainError("gibf: coordinates must be nonnegative");
  double k = 1.0;
  for (Eigen::Index j = 0; j < d; ++j) k *= component(static_cast<std::size_t>(j), x[j], y[j]);
  return k;
}

Vector GibfKernel::log_params() const {
  std::vector<double> v;
  for (const auto& th : theta_) {
    for (Eigen::Index l = 0; l < th.size(); ++l) v.push_back(std::log(th[l]));
  }
  return Eigen::Map<Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<std::string> GibfKernel::param_names() const {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < theta_.size(); ++j) {
    for (Eigen::Index l = 0; l < theta_[j].size(); ++l) {
      names.push_back("theta." + std::to_string(j) + "." + std::to_string(l));
    }
  }
  return names;
}

KernelPtr GibfKernel::with_log_params(const Vector& theta) const {
  std::vector<Vector> th;
  Eigen::Index k = 0;
  for (const auto& t : theta_) {
    if (k + t.size() > theta.size()) throw DomainError("gibf: too few hyperparameters");
    th.emplace_back(theta.segment(k, t.size()).array().exp().matrix());
    k += t.size();
  }
  if (k != theta.size()) throw DomainError("gibf: too many hyperparameters");
  return std::make_shared<GibfKernel>(m_, std::move(th));
}

KvDoc GibfKernel::describe() const {
  KvDoc doc;
  doc.set("kind", "gibf");
  Vector m(static_cast<Eigen::Index>(m_.size()));
  for (std::size_t j = 0; j < m_.size(); ++j) m[static_cast<Eigen::Index>(j)] = m_[j];
  doc.set("m", m);
  for (std::size_t j = 0; j < theta_.size(); ++j) doc.set("theta." + std::to_string(j), theta_[j]);
  return doc;
}

InnerProductKernel::InnerProductKernel(std::shared_ptr<const surrogates::FeatureMap> features)
    : features_(std::move(features)) {
  if (!features_) throw DomainError("inner-product kernel: null feature map");
}

double InnerProductKernel::operator()(const Point& x, const Point& y) const {
  return features_->evaluate(x).dot(features_->evaluate(y));
}

Matrix InnerProductKernel::cross(const Matrix& x, const Matrix& y) const {
  return features_->design_matrix(x) * features_->design_matrix(y).transpose();
}

KvDoc InnerProductKernel::describe() const {
  KvDoc doc;
  doc.set("kind", "inner_product");
  doc.merge("features", features_->describe());
  return doc;
}

double kernel_gaussian(const Point& x, const Point& y, double tau, double eta) {
  return GaussianKernel(tau, eta)(x, y);
}

double kernel_matern(const Point& x, const Point& y, double tau, double eta, double nu) {
  const double two_nu = 2.0 * nu;
  if (two_nu != 1.0 && two_nu != 3.0 && two_nu != 5.0) throw DomainError("matern: nu must be 1/2, 3/2 or 5/2");
  return MaternKernel(tau, eta, static_cast<int>(two_nu))(x, y);
}

double kernel_gibf(const Point& x, const Point& y, const std::vector<int>& m, const std::vector<Vector>& theta) {
  return GibfKernel(m, theta)(x, y);
}

KernelPtr kernel_from_kv(const KvDoc& doc) {
  const auto kind = doc.get_string("kind", "");
  if (kind == "gaussian") return std::make_shared<GaussianKernel>(doc.get_double("tau", 1.0), doc.get_double("eta", 1.0));
  if (kind == "matern") {
    const double nu = doc.get_double("nu", 2.5);
    return std::make_shared<MaternKernel>(doc.get_double("tau", 1.0), doc.get_double("eta", 1.0),
                                          static_cast<int>(std::lround(2.0 * nu)));
  }
  if (kind == "gibf") {
    const Vector m = doc.get_vector("m");
    std::vector<int> orders;
    std::vector<Vector> theta;
    for (Eigen::Index j = 0; j < m.size(); ++j) {
      orders.push_back(static_cast<int>(m[j]));
      const auto key = "theta." + std::to_string(j);
      theta.push_back(doc.has(key) ? doc.get_vector(key) : Vector::Ones(orders.back() + 2));
    }
    return std::make_shared<GibfKernel>(std::move(orders), std::move(theta));
  }
  throw ConfigError("unknown kernel kind '" + kind + "'");
}

MaternLimitReport matern_limit_check(double tau, double eta, const std::vector<double>& distances) {
  const MaternKernel matern(tau, eta, 5);
  const GaussianKernel gauss(tau, eta);
  MaternLimitReport r;
  for (double dist : distances) {
    const double a = matern.profile(dist);
    const double b = gauss.profile(dist);
    r.distances.push_back(dist);
    r.matern52.push_back(a);
    r.gaussian.push_back(b);
    r.gap.push_back(std::abs(a - b));
    r.max_gap = std::max(r.max_gap, r.gap.back());
  }
  return r;
}

}  // namespace simopt::gp
