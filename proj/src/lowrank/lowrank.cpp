#include "simopt/lowrank/lowrank.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>

namespace simopt::lowrank {

Vector woodbury_solve(const Vector& sigma_diag, const Matrix& u, const Matrix& c, const Matrix& v, const Vector& b) {
  const auto n = sigma_diag.size();
  const auto m = c.rows();
  if (c.cols() != m || u.rows() != n || u.cols() != m || v.rows() != m || v.cols() != n || b.size() != n) {
    throw DomainError("woodbury_solve: inconsistent dimensions");
  }
  if (!(sigma_diag.minCoeff() > 0.0)) throw DomainError("woodbury_solve: Sigma entries must be positive");
  const Vector sinv = sigma_diag.cwiseInverse();
  const Vector sb = sinv.cwiseProduct(b);
  if (m == 0) return sb;
  const Matrix cinv = linalg::lu_solve(c, Matrix(Matrix::Identity(m, m)));
  const Matrix inner = cinv + v * sinv.asDiagonal() * u;
  const Vector t = linalg::lu_solve(inner, Vector(v * sb));
  return sb - sinv.cwiseProduct(u * t);
}

ActiveSet select_active_set(Eigen::Index n, Eigen::Index m, Engine& rng) {
  if (m < 1 || m > n) throw DomainError("select_active_set: need 1 <= m <= n");
  // Partial Fisher-Yates: the first m entries are a uniform sample without replacement.
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  for (Eigen::Index i = 0; i < m; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, n - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  idx.resize(static_cast<std::size_t>(m));
  return {std::move(idx)};
}

ActiveSet full_active_set(Eigen::Index n) {
  ActiveSet a;
  a.indices.resize(static_cast<std::size_t>(n));
  std::iota(a.indices.begin(), a.indices.end(), Eigen::Index{0});
  return a;
}

double ApproxPosterior::var_at(const Point& x) const {
  return gp::clamp_variance(variance_report(x).value, prior_var_at(x));
}

namespace {

Matrix select_rows(const Matrix& points, const ActiveSet& active) {
  Matrix out(active.size(), points.cols());
  for (Eigen::Index k = 0; k < active.size(); ++k) {
    const auto i = active.indices[static_cast<std::size_t>(k)];
    if (i < 0 || i >= points.rows()) throw DomainError("active set index out of range");
    out.row(k) = points.row(i);
  }
  return out;
}

Vector inverse_noise(const Vector& noise) {
  if (noise.size() == 0 || !(noise.minCoeff() > 0.0)) throw DomainError("low-rank posterior: noise variances must be positive");
  return noise.cwiseInverse();
}

void check_inputs(const Matrix& points, const Vector& y, const Vector& noise) {
  if (points.rows() != y.size() || y.size() != noise.size()) throw DomainError("low-rank posterior: size mismatch");
}

Matrix tracked_cross(const gp::Kernel& k, const Matrix& x, const Matrix& y) {
  linalg::note_allocation(x.rows(), y.rows());
  return k.cross(x, y);
}

}  // namespace

namespace {

// With L L^T = K_mm, A = L^{-1} K_mn and B = I + A Sigma^{-1} A^T we have Q = L B L^T,
// so every Q^{-1} is applied through B, whose eigenvalues are >= 1.
struct InducedFactors {
  linalg::Cholesky kmm;
  Matrix a_sinv;  // A Sigma^{-1}, m x n
  linalg::Cholesky b;
};

InducedFactors induced_factors(const gp::Kernel& kernel, const Matrix& points, const Matrix& anchors,
                               const Vector& sinv) {
  InducedFactors f;
  f.kmm = linalg::Cholesky(kernel.gram(anchors));
  const Matrix kmn = tracked_cross(kernel, anchors, points);
  const Matrix a = f.kmm.half_solve(kmn);
  f.a_sinv = a * sinv.asDiagonal();
  linalg::note_allocation(f.a_sinv.rows(), f.a_sinv.cols());
  Matrix b = Matrix::Identity(anchors.rows(), anchors.rows());
  b.noalias() += f.a_sinv * a.transpose();
  linalg::symmetrize(b);
  f.b = linalg::Cholesky(b);
  return f;
}

}  // namespace

NystromNaivePosterior::NystromNaivePosterior(gp::GpPrior prior, const Matrix& points, const Vector& y,
                                             const Vector& noise, const ActiveSet& active)
    : ApproxPosterior(std::move(prior), points.rows(), active.size(), points.cols()), points_(points) {
  check_inputs(points, y, noise);
  inv_noise_ = inverse_noise(noise);
  auto f = induced_factors(*prior_.kernel, points, select_rows(points, active), inv_noise_);
  a_sinv_ = std::move(f.a_sinv);
  b_ = std::move(f.b);
  // (K~ + Sigma)^{-1} = Sigma^{-1} - Sigma^{-1} A^T B^{-1} A Sigma^{-1}
  const Vector r = y - prior_.mean.at(points);
  weights_ = inv_noise_.cwiseProduct(r) - a_sinv_.transpose() * b_.solve(Vector(a_sinv_ * r));
}

double NystromNaivePosterior::mean_at(const Point& x) const {
  return prior_.mean(x) + prior_.kernel->cross(points_, x).dot(weights_);
}

double NystromNaivePosterior::cov_at(const Point& x, const Point& y) const {
  const Vector kx = prior_.kernel->cross(points_, x);
  const Vector ky = prior_.kernel->cross(points_, y);
  const Vector ux = b_.half_solve(Vector(a_sinv_ * kx));
  const Vector uy = b_.half_solve(Vector(a_sinv_ * ky));
  return (*prior_.kernel)(x, y) - kx.dot(inv_noise_.cwiseProduct(ky)) + ux.dot(uy);
}

VarianceReport NystromNaivePosterior::variance_report(const Point& x) const {
  const double v = cov_at(x, x);
  return {v, v < 0.0};
}

NystromKernelPosterior::NystromKernelPosterior(gp::GpPrior prior, const Matrix& points, const Vector& y,
                                               const Vector& noise, const ActiveSet& active)
    : ApproxPosterior(std::move(prior), points.rows(), active.size(), points.cols()) {
  check_inputs(points, y, noise);
  const Vector sinv = inverse_noise(noise);
  anchors_ = select_rows(points, active);
  auto f = induced_factors(*prior_.kernel, points, anchors_, sinv);
  kmm_ = std::move(f.kmm);
  a_sinv_ = std::move(f.a_sinv);
  b_ = std::move(f.b);
  const Vector r = y - prior_.mean.at(points);
  weights_ = b_.solve(Vector(a_sinv_ * r));
}

double NystromKernelPosterior::mean_at(const Point& x) const {
  return prior_.mean(x) + kmm_.half_solve(prior_.kernel->cross(anchors_, x)).dot(weights_);
}

double NystromKernelPosterior::cov_at(const Point& x, const Point& y) const {
  // K(x,y) - k_m^T K_mm^{-1} k_m + k_m^T Q^{-1} k_m, with v = L^{-1} k_m
  const Vector vx = kmm_.half_solve(prior_.kernel->cross(anchors_, x));
  const Vector vy = kmm_.half_solve(prior_.kernel->cross(anchors_, y));
  return (*prior_.kernel)(x, y) - vx.dot(vy) + b_.half_solve(vx).dot(b_.half_solve(vy));
}

VarianceReport NystromKernelPosterior::variance_report(const Point& x) const {
  const double v = cov_at(x, x);
  return {v, v < 0.0};
}

Vector NystromKernelPosterior::smoother_row(const Point& x) const {
  const Vector v = kmm_.half_solve(prior_.kernel->cross(anchors_, x));
  return a_sinv_.transpose() * b_.solve(v);
}

Vector RffBasis::features(const Point& x) const {
  const double scale = std::sqrt(2.0 * k0 / static_cast<double>(m()));
  return scale * ((omegas * x + phases).array().cos()).matrix();
}

Matrix RffBasis::features(const Matrix& points) const {
  const double scale = std::sqrt(2.0 * k0 / static_cast<double>(m()));
  linalg::note_allocation(points.rows(), m());
  Matrix arg = points * omegas.transpose();
  arg.rowwise() += phases.transpose();
  return scale * arg.array().cos().matrix();
}

KvDoc RffBasis::to_kv() const {
  KvDoc doc;
  doc.set("seed", std::to_string(seed));
  doc.set("m", static_cast<long long>(m()));
  doc.set("dim", static_cast<long long>(omegas.cols()));
  doc.merge("kernel", kernel);
  return doc;
}

RffBasis RffBasis::from_kv(const KvDoc& doc) {
  const auto kernel = gp::kernel_from_kv(doc.subtree("kernel"));
  return spectral_sample(*kernel, doc.get_int("dim"), doc.get_int("m"), std::stoull(doc.at("seed")));
}

RffBasis spectral_sample(const gp::Kernel& kernel, Eigen::Index d, Eigen::Index m, std::uint64_t seed) {
  if (m < 1 || d < 1) throw DomainError("spectral_sample: m and d must be >= 1");
  const auto* stationary = dynamic_cast<const gp::StationaryKernel*>(&kernel);
  if (stationary == nullptr) {
    throw CapabilityError("spectral_sample: kernel '" + kernel.kind() + "' is not stationary");
  }
  const auto* matern = dynamic_cast<const gp::MaternKernel*>(&kernel);
  if (matern == nullptr && dynamic_cast<const gp::GaussianKernel*>(&kernel) == nullptr) {
    throw CapabilityError("spectral_sample: no spectral measure for kernel '" + kernel.kind() + "'");
  }
  Engine rng(seed);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
  RffBasis basis;
  basis.seed = seed;
  basis.k0 = stationary->k0();
  basis.kernel = kernel.describe();
  basis.omegas.resize(m, d);
  basis.phases.resize(m);
  const double eta = stationary->eta();
  std::chi_squared_distribution<double> chi2(matern ? 2.0 * matern->nu() : 1.0);
  for (Eigen::Index t = 0; t < m; ++t) {
    double scale = 1.0 / eta;
    if (matern) scale /= std::sqrt(chi2(rng) / (2.0 * matern->nu()));
    for (Eigen::Index j = 0; j < d; ++j) basis.omegas(t, j) = scale * z(rng);
    double b = 0.0;
    while (b <= 0.0) b = u(rng);
    basis.phases[t] = b;
  }
  return basis;
}

double rff_kernel_estimate(const RffBasis& basis, const Point& x, const Point& y) {
  // Sum in a fixed order so the estimate is symmetric bit for bit.
  const double scale = 2.0 * basis.k0 / static_cast<double>(basis.m());
  double total = 0.0;
  for (Eigen::Index t = 0; t < basis.m(); ++t) {
    const double a = std::cos(basis.omegas.row(t).dot(x) + basis.phases[t]);
    const double b = std::cos(basis.omegas.row(t).dot(y) + basis.phases[t]);
    total += a * b;
  }
  return scale * total;
}

RffPosterior::RffPosterior(gp::GpPrior prior, const Matrix& points, const Vector& y, const Vector& noise,
                           RffBasis basis)
    : ApproxPosterior(std::move(prior), points.rows(), basis.m(), points.cols()), basis_(std::move(basis)) {
  check_inputs(points, y, noise);
  if (basis_.omegas.cols() != points.cols()) throw DomainError("rff posterior: basis dimension mismatch");
  const Vector sinv = inverse_noise(noise);
  const Matrix phi = basis_.features(points);
  const Vector r = y - prior_.mean.at(points);
  if (m_ > n_) {
    // Sigma + Phi Phi^T is the smaller system; A^{-1} = I - Phi^T (Sigma + Phi Phi^T)^{-1} Phi
    Matrix c = phi * phi.transpose();
    c.diagonal() += noise;
    linalg::symmetrize(c);
    a_ = linalg::Cholesky(c);
    weights_ = phi.transpose() * a_.solve(r);
    phi_ = phi;
    return;
  }
  Matrix a = Matrix::Identity(m_, m_);
  a.noalias() += phi.transpose() * sinv.asDiagonal() * phi;
  linalg::symmetrize(a);
  a_ = linalg::Cholesky(a);
  weights_ = a_.solve(Vector(phi.transpose() * sinv.cwiseProduct(r)));
}

double RffPosterior::mean_at(const Point& x) const { return prior_.mean(x) + basis_.features(x).dot(weights_); }

double RffPosterior::cov_at(const Point& x, const Point& y) const {
  const Vector px = basis_.features(x);
  const Vector py = basis_.features(y);
  if (phi_.size() > 0) return (*prior_.kernel)(x, y) - a_.half_solve(Vector(phi_ * px)).dot(a_.half_solve(Vector(phi_ * py)));
  // K(x,y) - phi(x)^T phi(y) + phi(x)^T A^{-1} phi(y)
  return (*prior_.kernel)(x, y) - px.dot(py) + a_.half_solve(px).dot(a_.half_solve(py));
}

VarianceReport RffPosterior::variance_report(const Point& x) const {
  const double v = cov_at(x, x);
  return {v, v < 0.0};
}

double RffPosterior::var_at(const Point& x) const { return std::max(0.0, cov_at(x, x)); }

NystromInducedKernel::NystromInducedKernel(gp::KernelPtr base, Matrix anchors)
    : base_(std::move(base)), anchors_(std::move(anchors)), kmm_(base_->gram(anchors_)) {}

double NystromInducedKernel::operator()(const Point& x, const Point& y) const {
  const Vector kx = kmm_.half_solve(base_->cross(anchors_, x));
  const Vector ky = kmm_.half_solve(base_->cross(anchors_, y));
  return kx.dot(ky);
}

KvDoc RffInducedKernel::describe() const {
  KvDoc doc;
  doc.set("kind", "rff_induced");
  doc.merge("basis", basis_.to_kv());
  return doc;
}

std::unique_ptr<ApproxPosterior> make_approx(const std::string& variant, const gp::GpPrior& prior,
                                             const Matrix& points, const Vector& y, const Vector& noise,
                                             Eigen::Index m, std::uint64_t seed) {
  if (variant == "rff") {
    return std::make_unique<RffPosterior>(prior, points, y, noise,
                                          spectral_sample(*prior.kernel, points.cols(), m, seed));
  }
  Engine rng(seed);
  const auto active = select_active_set(points.rows(), m, rng);
  if (variant == "nystrom_naive") return std::make_unique<NystromNaivePosterior>(prior, points, y, noise, active);
  if (variant == "nystrom_kernel") return std::make_unique<NystromKernelPosterior>(prior, points, y, noise, active);
  throw ConfigError("unknown low-rank variant '" + variant + "'");
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("log_log_slope: need at least two points");
  double mx = 0.0;
  double my = 0.0;
  const auto n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]) / n;
    my += std::log(y[i]) / n;
  }
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

void ScalingReport::write(std::ostream& out, char sep) const {
  out << "variant" << sep << "n" << sep << "m" << sep << "build_ms" << sep << "query_ms" << '\n';
  for (const auto& r : rows) {
    out << r.variant << sep << r.n << sep << r.m << sep << format_double(r.build_ms) << sep
        << format_double(r.query_ms) << '\n';
  }
}

namespace {
double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}
}  // namespace

SyntheticRegression synthetic_regression(Eigen::Index n, Eigen::Index queries, std::uint64_t seed) {
  Engine rng(derive_seed(seed, static_cast<std::uint64_t>(n)));
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::normal_distribution<double> z;
  SyntheticRegression d{Matrix(n, 2), Vector(n), Vector::Constant(n, 0.01), Matrix(queries, 2)};
  for (Eigen::Index i = 0; i < n; ++i) {
    d.points(i, 0) = u(rng);
    d.points(i, 1) = u(rng);
    d.y[i] = std::sin(d.points(i, 0)) + std::cos(d.points(i, 1)) + 0.1 * z(rng);
  }
  for (Eigen::Index i = 0; i < queries; ++i) d.queries.row(i) << u(rng), u(rng);
  return d;
}

ScalingReport scaling_report(const std::string& variant, const std::vector<Eigen::Index>& n_grid, Eigen::Index m,
                             int repeats, std::uint64_t seed) {
  using clock = std::chrono::steady_clock;
  if (repeats < 1) throw DomainError("scaling_report: repeats must be >= 1");
  gp::GpPrior prior{gp::MeanFunction::constant(0.0), std::make_shared<gp::GaussianKernel>(1.0, 1.5)};
  const Box box{Vector::Zero(2), Vector::Constant(2, 10.0)};
  ScalingReport report;
  std::vector<double> ns;
  std::vector<double> times;
  for (const auto n : n_grid) {
    const auto data = synthetic_regression(n, 50, seed);
    const Matrix& x = data.points;
    const Vector& y = data.y;
    const Vector& noise = data.noise;
    const Matrix& queries = data.queries;

    std::vector<double> build;
    std::vector<double> query;
    for (int r = -1; r < repeats; ++r) {  // r = -1 warms caches and is not timed
      double sink = 0.0;
      const auto t0 = clock::now();
      std::unique_ptr<gp::PosteriorView> post;
      if (variant == "exact") {
        post = std::make_unique<gp::GpPosterior>(prior, x, y, noise);
      } else {
        post = make_approx(variant, prior, x, y, noise, std::min(m, n), seed + static_cast<std::uint64_t>(r + 1));
      }
      const auto t1 = clock::now();
      for (Eigen::Index i = 0; i < queries.rows(); ++i) {
        const Point q = queries.row(i).transpose();
        sink += post->mean_at(q) + post->cov_at(q, q);
      }
      const auto t2 = clock::now();
      if (!std::isfinite(sink)) throw Error("scaling_report: non-finite posterior output");
      if (r < 0) continue;
      build.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
      query.push_back(std::chrono::duration<double, std::milli>(t2 - t1).count());
    }
    ScalingRow row{variant, n, variant == "exact" ? n : std::min(m, n), median(build), median(query)};
    report.rows.push_back(row);
    ns.push_back(static_cast<double>(n));
    times.push_back(std::max(row.build_ms, 1e-6));
  }
  if (ns.size() >= 2) report.slope = log_log_slope(ns, times);
  return report;
}

MSelection choose_m(const std::string& variant, const gp::GpPrior& prior, const Matrix& points, const Vector& y,
                    const Vector& noise, const std::vector<Eigen::Index>& m_grid, double holdout_fraction,
                    double threshold, std::uint64_t seed) {
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) throw DomainError("choose_m: holdout fraction in (0,1)");
  if (m_grid.empty()) throw DomainError("choose_m: empty m grid");
  const auto n = points.rows();
  const auto n_hold = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(holdout_fraction * static_cast<double>(n)));
  if (n_hold >= n) throw DomainError("choose_m: holdout leaves no training data");
  Engine rng(seed);
  const auto perm = select_active_set(n, n, rng).indices;
  const auto n_train = n - n_hold;
  Matrix xt(n_train, points.cols());
  Vector yt(n_train);
  Vector st(n_train);
  Matrix xh(n_hold, points.cols());
  Vector yh(n_hold);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto src = perm[static_cast<std::size_t>(i)];
    if (i < n_train) {
      xt.row(i) = points.row(src);
      yt[i] = y[src];
      st[i] = noise[src];
    } else {
      xh.row(i - n_train) = points.row(src);
      yh[i - n_train] = y[src];
    }
  }
  MSelection sel;
  for (const auto m : m_grid) {
    if (m > n_train) break;
    const auto post = make_approx(variant, prior, xt, yt, st, m, derive_seed(seed, static_cast<std::uint64_t>(m)));
    const double rmse = std::sqrt((post->mean_at(xh) - yh).squaredNorm() / static_cast<double>(n_hold));
    sel.tried.push_back(m);
    sel.holdout_rmse.push_back(rmse);
    sel.m = m;
    const auto k = sel.holdout_rmse.size();
    if (k >= 2) {
      const double prev = sel.holdout_rmse[k - 2];
      if (prev <= 0.0 || (prev - rmse) / prev < threshold) {
        sel.m = sel.tried[k - 2];
        break;
      }
    }
  }
  if (sel.tried.empty()) throw DomainError("choose_m: every m exceeds the training size");
  return sel;
}

}  // namespace simopt::lowrank
