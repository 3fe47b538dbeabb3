#include "simopt/gp/kernel.hpp"
#include "simopt/gp/posterior.hpp"
#include "simopt/rng.hpp"
#include "simopt/surrogates/features.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace simopt;
using namespace simopt::gp;

namespace {

Point pt(std::initializer_list<double> v) {
  Point p(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double a : v) p[i++] = a;
  return p;
}

Matrix random_points(Eigen::Index n, Eigen::Index d, Engine& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = u(rng);
  }
  return x;
}

Vector random_vector(Eigen::Index n, Engine& rng, double lo = -1.0, double hi = 1.0) {
  return random_points(n, 1, rng, lo, hi).col(0);
}

GpPrior gaussian_prior(double tau, double eta, double c = 0.0) {
  return {MeanFunction::constant(c), std::make_shared<GaussianKernel>(tau, eta)};
}

}  // namespace

TEST_CASE("gaussian kernel") {
  CHECK(kernel_gaussian(pt({1, 2}), pt({1, 2}), 1.5, 0.3) == doctest::Approx(2.25).epsilon(1e-15));
  CHECK(kernel_gaussian(pt({0}), pt({1}), 1.0, 1.0) == doctest::Approx(0.60653066).epsilon(1e-8));
  double prev = 2.0;
  for (double r = 0.0; r < 20.0; r += 0.25) {
    const double k = kernel_gaussian(pt({0}), pt({r}), 1.0, 1.0);
    CHECK(k < prev);
    prev = k;
  }
  CHECK_THROWS_AS(GaussianKernel(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(GaussianKernel(1.0, -1.0), DomainError);
}

TEST_CASE("matern kernel") {
  CHECK(kernel_matern(pt({0}), pt({1}), 1.0, 1.0, 0.5) == doctest::Approx(0.36787944).epsilon(1e-8));
  CHECK(kernel_matern(pt({3}), pt({3}), 2.0, 0.7, 1.5) == doctest::Approx(4.0).epsilon(1e-15));
  const double s5 = std::sqrt(5.0);
  CHECK(kernel_matern(pt({0}), pt({1}), 1.0, 1.0, 2.5) ==
        doctest::Approx((1.0 + s5 + 5.0 / 3.0) * std::exp(-s5)).epsilon(1e-15));
  CHECK(kernel_matern(pt({0}), pt({1}), 1.0, 1.0, 2.5) == doctest::Approx(0.52399).epsilon(1e-5));
  CHECK_THROWS_AS((void)kernel_matern(pt({0}), pt({1}), 1.0, 1.0, 1.0), DomainError);
}

TEST_CASE("generalized integrated Brownian kernel") {
  CHECK(kernel_gibf(pt({2}), pt({3}), {0}, {pt({1, 1})}) == doctest::Approx(3.0).epsilon(1e-15));
  for (int m : {0, 1, 2}) {
    const Vector th = Vector::LinSpaced(m + 2, 0.7, 2.0);
    CHECK(kernel_gibf(pt({0}), pt({1.7}), {m}, {th}) == doctest::Approx(th[0]).epsilon(1e-15));
  }
  // m=1: 1 + ab + int_0^2 (2-u)(3-u) du = 1 + 6 + 14/3
  CHECK(kernel_gibf(pt({2}), pt({3}), {1}, {pt({1, 1, 1})}) == doctest::Approx(35.0 / 3.0).epsilon(1e-14));
  // m=2: 1 + ab + (ab)^2/4 + int_0^1 (1-u)^2 (2-u)^2 du / 4 = 4 + 31/120
  CHECK(kernel_gibf(pt({1}), pt({2}), {2}, {pt({1, 1, 1, 1})}) == doctest::Approx(511.0 / 120.0).epsilon(1e-14));

  const std::vector<int> m{1, 2};
  const std::vector<Vector> th{pt({0.5, 1.0, 2.0}), pt({1.0, 0.3, 0.2, 1.5})};
  const Point a = pt({0.4, 1.2});
  const Point b = pt({2.0, 0.7});
  CHECK(kernel_gibf(a, b, m, th) == doctest::Approx(kernel_gibf(pt({0.4}), pt({2.0}), {1}, {th[0]}) *
                                                    kernel_gibf(pt({1.2}), pt({0.7}), {2}, {th[1]}))
                                         .epsilon(1e-15));
  CHECK_THROWS_AS((void)kernel_gibf(pt({-1}), pt({1}), {0}, {pt({1, 1})}), DomainError);
  CHECK_THROWS_AS((void)kernel_gibf(pt({1}), pt({1}), {3}, {Vector::Ones(5)}), DomainError);

  // m = 0: gram = theta0 + theta1 min(x_i, x_j) exactly
  Engine rng(1);
  const Matrix x = random_points(12, 1, rng, 0.0, 5.0);
  const GibfKernel k({0}, {pt({0.8, 1.7})});
  const Matrix g = k.gram(x);
  for (Eigen::Index i = 0; i < 12; ++i) {
    for (Eigen::Index j = 0; j < 12; ++j) CHECK(g(i, j) == 0.8 + 1.7 * std::min(x(i, 0), x(j, 0)));
  }
}

TEST_CASE("matern limit report") {
  const auto r = matern_limit_check(1.0, 1.0, {0.0, 1.0, 50.0});
  CHECK(r.gap[0] == 0.0);
  CHECK(r.matern52[0] == 1.0);
  CHECK(r.gap[1] == doctest::Approx(0.0825).epsilon(2e-3));
  CHECK(r.gap[2] < 1e-12);
  CHECK(r.max_gap == r.gap[1]);
}

TEST_CASE("gram matrices are symmetric positive semidefinite") {
  Engine rng(21);
  const std::vector<KernelPtr> kernels{
      std::make_shared<GaussianKernel>(1.3, 0.4),
      std::make_shared<MaternKernel>(0.8, 0.3, 1),
      std::make_shared<MaternKernel>(0.8, 0.3, 3),
      std::make_shared<MaternKernel>(1.1, 0.5, 5),
      std::make_shared<GibfKernel>(std::vector<int>{1, 2}, std::vector<Vector>{pt({1, 1, 1}), pt({1, 1, 1, 1})}),
      std::make_shared<InnerProductKernel>(surrogates::polynomial_features(2, 2))};
  for (const auto& k : kernels) {
    for (int set = 0; set < 30; ++set) {
      const auto n = std::uniform_int_distribution<Eigen::Index>(1, 25)(rng);
      const Matrix x = random_points(n, 2, rng, 0.0, 2.0);
      const Matrix g = k->gram(x);
      CHECK((g - g.transpose()).norm() == 0.0);
      const double lo = Eigen::SelfAdjointEigenSolver<Matrix>(g).eigenvalues().minCoeff();
      CHECK(lo >= -1e-8 * g.trace());
    }
  }
}

TEST_CASE("mean functions") {
  const auto c = MeanFunction::constant(2.5);
  CHECK(c(pt({0.0, 9.0})) == 2.5);
  CHECK(c(pt({-3.0, 1.0})) == 2.5);
  const auto b = MeanFunction::basis(pt({1.0, 2.0, -1.0}), surrogates::polynomial_features(2, 1));
  CHECK(b(pt({3.0, 4.0})) == 1.0 + 6.0 - 4.0);
  const auto s = MeanFunction::stylized([](const Point& x) { return x.squaredNorm(); }, 0.5);
  CHECK(s(pt({1.0, 2.0})) == 2.5);
}

TEST_CASE("scalar posterior") {
  const GpPosterior post({MeanFunction::constant(0.0), std::make_shared<GaussianKernel>(1.0, 1.0)},
                         Matrix::Zero(1, 1), pt({2.0}), pt({1.0}));
  CHECK(post.mean_at(pt({0.0})) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(post.var_at(pt({0.0})) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(post.cov_at(pt({0.0}), pt({0.0})) == post.var_at(pt({0.0})));
}

TEST_CASE("posterior with zero residual is the prior mean") {
  Engine rng(3);
  const auto prior = gaussian_prior(1.0, 0.3, 1.75);
  const Matrix x = random_points(8, 2, rng);
  const GpPosterior post(prior, x, Vector::Constant(8, 1.75), Vector::Constant(8, 0.01));
  const Matrix q = random_points(20, 2, rng);
  for (Eigen::Index i = 0; i < 20; ++i) CHECK(post.mean_at(Point(q.row(i).transpose())) == doctest::Approx(1.75).epsilon(1e-14));
}

TEST_CASE("noise-free posterior interpolates") {
  Matrix x(5, 1);
  x << 0.0, 0.25, 0.5, 0.75, 1.0;
  const Vector y = pt({0.3, -1.0, 2.0, 0.5, 0.0});
  const GpPosterior post(gaussian_prior(1.0, 0.2), x, y, Vector::Zero(5));
  for (Eigen::Index i = 0; i < 5; ++i) {
    const Point xi = x.row(i).transpose();
    CHECK(std::abs(post.mean_at(xi) - y[i]) <= 1e-6 * std::max(1.0, std::abs(y[i])));
    CHECK(post.var_at(xi) <= 1e-6);
  }
}

TEST_CASE("posterior against dense formulas, variance reduction and reversion") {
  Engine rng(4);
  for (int inst = 0; inst < 10; ++inst) {
    const auto prior = gaussian_prior(1.2, 0.35, 0.4);
    const Matrix x = random_points(7, 2, rng);
    const Vector y = random_vector(7, rng);
    const Vector noise = random_vector(7, rng, 0.01, 0.1);
    const GpPosterior post(prior, x, y, noise);
    Matrix k = prior.kernel->gram(x);
    k.diagonal() += noise;
    const Matrix kinv = k.inverse();
    const Matrix q = random_points(15, 2, rng, -0.5, 1.5);
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
      const Point a = q.row(i).transpose();
      const Vector ka = prior.kernel->cross(x, a);
      CHECK(post.mean_at(a) == doctest::Approx(0.4 + ka.dot(kinv * (y.array() - 0.4).matrix())).epsilon(1e-10));
      CHECK(post.var_at(a) == doctest::Approx(1.44 - ka.dot(kinv * ka)).epsilon(1e-9));
      CHECK(post.var_at(a) <= 1.44 + 1e-8);
    }
    const Point far = pt({1.0 + 10.0 * 0.35, 1.0 + 10.0 * 0.35});
    CHECK(std::abs(post.mean_at(far) - 0.4) <= 1e-3 * 1.44);
    CHECK(std::abs(post.var_at(far) - 1.44) <= 1e-3 * 1.44);
  }
}

TEST_CASE("variance clamp") {
  CHECK(clamp_variance(-1e-10, 1.0) == 0.0);
  CHECK(clamp_variance(0.3, 1.0) == 0.3);
  CHECK_THROWS_AS((void)clamp_variance(-1e-6, 1.0), DomainError);
}

TEST_CASE("log marginal likelihood") {
  const GpPrior unit{MeanFunction::constant(0.0), std::make_shared<GaussianKernel>(std::sqrt(0.5), 1.0)};
  CHECK(log_marginal_likelihood(unit, Matrix::Zero(1, 1), pt({0.0}), pt({0.5})) ==
        doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-15));
  CHECK(log_marginal_likelihood(unit, Matrix::Zero(1, 1), pt({0.0}), pt({0.5})) ==
        doctest::Approx(-0.91894).epsilon(1e-5));

  Engine rng(5);
  for (int inst = 0; inst < 10; ++inst) {
    const auto prior = gaussian_prior(0.9, 0.4, -0.2);
    const Matrix x = random_points(6, 2, rng);
    const Vector y = random_vector(6, rng);
    const Vector noise = random_vector(6, rng, 0.01, 0.2);
    Matrix cov = prior.kernel->gram(x);
    cov.diagonal() += noise;
    const Vector r = y.array() + 0.2;
    const double dense = -0.5 * r.dot(cov.inverse() * r) - 0.5 * std::log(cov.determinant()) -
                         3.0 * std::log(2.0 * std::numbers::pi);
    CHECK(std::abs(log_marginal_likelihood(prior, x, y, noise) - dense) < 1e-8);
    // a larger residual lowers the quadratic term
    const Vector y2 = (2.0 * r).array() - 0.2;
    CHECK(log_marginal_likelihood(prior, x, y2, noise) < log_marginal_likelihood(prior, x, y, noise));
  }
}

TEST_CASE("hyperparameter fitting") {
  Engine rng(2);
  const Eigen::Index n = 40;
  const Matrix x = random_points(n, 1, rng, 0.0, 5.0);
  const GaussianKernel truth(1.0, 0.5);
  Matrix cov = truth.gram(x);
  cov.diagonal().array() += 1e-4;
  std::normal_distribution<double> z;
  Vector e(n);
  for (Eigen::Index i = 0; i < n; ++i) e[i] = z(rng);
  const Vector y = Eigen::LLT<Matrix>(cov).matrixL() * e;
  const Vector noise = Vector::Constant(n, 1e-4);

  PriorFamily family{std::make_shared<GaussianKernel>(1.0, 1.0)};
  const auto bounds = stationary_bounds(0.1, 10.0, 0.05, 5.0);
  Engine fit_rng(7);
  const auto fit = fit_hyperparameters(family, x, y, noise, bounds, fit_rng);
  const double eta = std::exp(fit.theta[1]);
  CHECK(eta > 0.5 / 1.5);
  CHECK(eta < 0.5 * 1.5);
  double best = -INFINITY;
  for (std::size_t i = 0; i < fit.starts.size(); ++i) {
    CHECK(fit.log_likelihood >= fit.start_values[i]);
    best = std::max(best, fit.local_values[i]);
  }
  CHECK(fit.log_likelihood == best);

  const Vector at_truth = pt({0.0, std::log(0.5)});
  HyperFitOptions one;
  one.restarts = 1;
  one.extra_start = at_truth;
  const auto local = fit_hyperparameters(family, x, y, noise, bounds, fit_rng, one);
  CHECK(local.log_likelihood >= log_marginal_likelihood(family.build(at_truth), x, y, noise));

  const auto point = stationary_bounds(0.7, 0.7, 0.3, 0.3);
  const auto pinned = fit_hyperparameters(family, x, y, noise, point, fit_rng);
  CHECK(std::exp(pinned.theta[0]) == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(std::exp(pinned.theta[1]) == doctest::Approx(0.3).epsilon(1e-14));
}

TEST_CASE("one-step updating scheme") {
  Engine rng(8);
  const auto prior = gaussian_prior(1.0, 0.3, 0.2);
  const Matrix x = random_points(5, 2, rng);
  const Vector y = random_vector(5, rng);
  const Vector noise = Vector::Constant(5, 0.05);
  const auto base = std::make_shared<GpPosterior>(prior, x, y, noise);
  const Matrix q = random_points(20, 2, rng);

  const Point xn = pt({0.5, 0.5});
  const auto same = kg_update(base, xn, base->mean_at(xn), 0.05);
  CHECK(same->innovation() == 0.0);
  for (Eigen::Index i = 0; i < 20; ++i) CHECK(same->mean_at(Point(q.row(i).transpose())) == base->mean_at(Point(q.row(i).transpose())));

  const Point remote = pt({1e3, 1e3});
  const auto far = kg_update(base, remote, 5.0, 0.05);
  for (Eigen::Index i = 0; i < 20; ++i) {
    const Point a = q.row(i).transpose();
    CHECK(far->delta(a) == 0.0);
    CHECK(far->cov_at(a, a) == base->cov_at(a, a));
  }

  const auto upd = kg_update(base, xn, 1.3, 0.05);
  Matrix x2(6, 2);
  x2 << x, xn.transpose();
  Vector y2(6);
  y2 << y, 1.3;
  const GpPosterior refit(prior, x2, y2, Vector::Constant(6, 0.05));
  for (Eigen::Index i = 0; i < 20; ++i) {
    const Point a = q.row(i).transpose();
    CHECK(std::abs(upd->mean_at(a) - refit.mean_at(a)) < 1e-7);
    for (Eigen::Index j = 0; j < 20; ++j) {
      const Point b = q.row(j).transpose();
      CHECK(std::abs(upd->cov_at(a, b) - refit.cov_at(a, b)) < 1e-7);
    }
  }

  const auto exact = std::make_shared<GpPosterior>(prior, x, y, Vector::Zero(5));
  CHECK_THROWS_AS((void)kg_update(exact, x.row(0).transpose(), 0.0, 0.0), DomainError);
}

TEST_CASE("kernel descriptors round trip") {
  const std::vector<KernelPtr> kernels{std::make_shared<GaussianKernel>(1.3, 0.4),
                                       std::make_shared<MaternKernel>(0.8, 0.3, 3),
                                       std::make_shared<GibfKernel>(std::vector<int>{1}, std::vector<Vector>{pt({1, 2, 3})})};
  for (const auto& k : kernels) {
    const auto back = kernel_from_kv(KvDoc::parse(k->describe().serialize()));
    CHECK((*back)(pt({0.2}), pt({0.9})) == (*k)(pt({0.2}), pt({0.9})));
  }
}
