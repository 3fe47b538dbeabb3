#include "simopt/gp/kernel.hpp"
#include "simopt/rng.hpp"
#include "simopt/sim/testbed.hpp"
#include "simopt/surrogates/linear.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace simopt;
using namespace simopt::surrogates;

namespace {

Point pt(std::initializer_list<double> v) {
  Point p(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double a : v) p[i++] = a;
  return p;
}

// phi(x) = 1
class ConstantFeature final : public FeatureMap {
 public:
  explicit ConstantFeature(Eigen::Index d) : d_(d) {}
  Eigen::Index size() const override { return 1; }
  Eigen::Index dim() const override { return d_; }
  Vector evaluate(const Point&) const override { return Vector::Ones(1); }
  bool has_jacobian() const override { return true; }
  Matrix jacobian(const Point&) const override { return Matrix::Zero(1, d_); }
  KvDoc describe() const override { return {}; }

 private:
  Eigen::Index d_;
};

class ValueOnly final : public FeatureMap {
 public:
  Eigen::Index size() const override { return 2; }
  Eigen::Index dim() const override { return 1; }
  Vector evaluate(const Point& x) const override { return pt({1.0, std::abs(x[0])}); }
  KvDoc describe() const override { return {}; }
};

Matrix random_points(Eigen::Index n, Eigen::Index d, Engine& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = u(rng);
  }
  return x;
}

sim::Dataset dataset_from(const Matrix& x, const Vector& y) {
  sim::Dataset d(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) d.add({x.row(i).transpose(), y[i], 1, std::nullopt, std::nullopt});
  return d;
}

}  // namespace

TEST_CASE("polynomial features") {
  CHECK(polynomial_features(2, 1)->evaluate(pt({3, 4})) == pt({1, 3, 4}));
  CHECK(polynomial_features(2, 2)->evaluate(pt({3, 4})) == pt({1, 3, 4, 9, 12, 16}));
  CHECK(polynomial_features(1, 2)->size() == 3);
  CHECK(polynomial_features(5, 2)->size() == 1 + 5 + 15);
  CHECK_THROWS_AS((void)polynomial_features(2, 3), DomainError);
}

TEST_CASE("radial basis features") {
  const auto g = rbf_features({pt({1, 2})}, RbfKind::gaussian, 1.0);
  CHECK(g->evaluate(pt({1, 2}))[0] == 1.0);
  CHECK(g->evaluate(pt({2, 2}))[0] == doctest::Approx(0.60653065971263342).epsilon(1e-15));
  const auto t = rbf_features({pt({0, 0})}, RbfKind::thin_plate);
  CHECK(t->evaluate(pt({0, 1}))[0] == 0.0);
  CHECK(t->evaluate(pt({0, 0}))[0] == 0.0);
  CHECK(t->evaluate(pt({0, 2}))[0] == doctest::Approx(4.0 * std::log(2.0)));
}

TEST_CASE("stylized augmentation") {
  const auto base = polynomial_features(1, 2);
  const auto aug = augment_with_stylized(base, [](const Point&) { return 0.0; });
  CHECK(aug->size() == 4);

  Engine rng(3);
  const Matrix x = random_points(12, 1, rng);
  Vector y(12);
  for (Eigen::Index i = 0; i < 12; ++i) y[i] = std::sin(3.0 * x(i, 0));
  const auto plain = fit_rls(base, x, y, 0.1);
  const auto with_zero = fit_rls(aug, x, y, 0.1);
  CHECK(with_zero.beta[3] == 0.0);
  for (double v : {-0.9, -0.2, 0.4, 0.8}) {
    CHECK(with_zero.predict(pt({v})) == doctest::Approx(plain.predict(pt({v}))).epsilon(1e-12));
  }

  const Stylized psi = [](const Point& p) { return std::exp(p[0]) + p[0] * p[0]; };
  const auto one_psi = augment_with_stylized(std::make_shared<ConstantFeature>(1), psi);
  Vector y2(12);
  for (Eigen::Index i = 0; i < 12; ++i) y2[i] = 2.0 * psi(x.row(i).transpose());
  const auto fit = fit_ols(one_psi, x, y2);
  CHECK(std::abs(fit.beta[1] - 2.0) < 1e-8);
  CHECK(std::abs(fit.beta[0]) < 1e-8);
}

TEST_CASE("feature jacobians match central differences") {
  Engine rng(9);
  const std::vector<FeatureMapPtr> maps{
      polynomial_features(3, 2),
      rbf_features({pt({0.1, 0.2, 0.3}), pt({-0.5, 0.5, 0.0})}, RbfKind::gaussian, 0.7),
      rbf_features({pt({0.1, 0.2, 0.3}), pt({-0.5, 0.5, 0.0})}, RbfKind::thin_plate),
      augment_with_stylized(
          polynomial_features(3, 1), [](const Point& p) { return std::sin(p[0]) * p[2]; }, "psi",
          [](const Point& p) { return pt({std::cos(p[0]) * p[2], 0.0, std::sin(p[0])}); })};
  for (const auto& map : maps) {
    REQUIRE(map->has_jacobian());
    const Matrix pts = random_points(20, 3, rng);
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      const Point x = pts.row(i).transpose();
      const Matrix jac = map->jacobian(x);
      Matrix fd(map->size(), 3);
      const double h = 1e-6;
      for (Eigen::Index j = 0; j < 3; ++j) {
        Point a = x;
        Point b = x;
        a[j] += h;
        b[j] -= h;
        fd.col(j) = (map->evaluate(a) - map->evaluate(b)) / (2.0 * h);
      }
      CHECK((jac - fd).norm() <= 1e-5 * std::max(1.0, jac.norm()));
    }
  }
}

TEST_CASE("ordinary least squares") {
  Matrix x(2, 1);
  x << 0.0, 1.0;
  const auto two = fit_ols(polynomial_features(1, 1), x, pt({1.0, 3.0}));
  CHECK(two.beta[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(two.beta[1] == doctest::Approx(2.0).epsilon(1e-14));

  Engine rng(4);
  const Matrix xs = random_points(20, 2, rng);
  const auto zero = fit_ols(polynomial_features(2, 2), xs, Vector::Zero(20));
  CHECK(zero.beta.norm() == 0.0);

  CHECK_THROWS_AS((void)fit_ols(polynomial_features(2, 2), random_points(4, 2, rng), Vector::Ones(4)),
                  RankDeficiencyError);

  // residual orthogonality
  Vector y(20);
  std::normal_distribution<double> z;
  for (Eigen::Index i = 0; i < 20; ++i) y[i] = z(rng);
  const auto map = polynomial_features(2, 2);
  const auto fit = fit_ols(map, dataset_from(xs, y));
  const Matrix phi = map->design_matrix(xs);
  CHECK((phi.transpose() * (y - phi * fit.beta)).norm() <= 1e-8 * y.norm());
}

TEST_CASE("ridge regression") {
  Engine rng(5);
  const auto map = polynomial_features(2, 2);
  const Matrix x = random_points(15, 2, rng);
  Vector y(15);
  std::normal_distribution<double> z;
  for (Eigen::Index i = 0; i < 15; ++i) y[i] = z(rng);

  const auto ols = fit_ols(map, x, y);
  const auto rls0 = fit_rls(map, x, y, 0.0);
  CHECK((rls0.beta - ols.beta).norm() <= 1e-8 * ols.beta.norm());

  // dense oracle (Phi^T Phi + n lambda I)^{-1} Phi^T y and monotone shrinkage
  const Matrix phi = map->design_matrix(x);
  double prev = ols.beta.norm();
  for (double lambda : {1e-4, 1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0, 1e4}) {
    const auto fit = fit_rls(map, dataset_from(x, y), lambda);
    Matrix a = phi.transpose() * phi;
    a.diagonal().array() += 15.0 * lambda;
    const Vector oracle = a.ldlt().solve(phi.transpose() * y);
    CHECK((fit.beta - oracle).norm() <= 1e-9 * std::max(1.0, oracle.norm()));
    CHECK(fit.beta.norm() <= prev);
    prev = fit.beta.norm();
  }
  CHECK(prev < 1e-2);

  const auto one = fit_rls(std::make_shared<ConstantFeature>(1), Matrix::Zero(1, 1), Vector::Ones(1), 0.25);
  CHECK(one.beta[0] == doctest::Approx(1.0 / 1.25).epsilon(1e-15));

  CHECK_THROWS_AS((void)fit_rls(map, x, y, -1.0), DomainError);
  Matrix dup(2, 2);
  dup << 0.5, 0.5, 0.5, 0.5;
  CHECK_THROWS((void)fit_rls(map, dup, pt({1.0, 2.0}), 0.0));
}

TEST_CASE("kernel ridge predictor") {
  Engine rng(6);
  const auto map = polynomial_features(2, 2);
  const gp::InnerProductKernel k(map);
  const Matrix x = random_points(10, 2, rng);
  const Matrix q = random_points(100, 2, rng);
  CHECK(krr_predict(k, x, Vector::Zero(10), 0.1, q).norm() == 0.0);

  Vector y(10);
  std::normal_distribution<double> z;
  for (Eigen::Index i = 0; i < 10; ++i) y[i] = z(rng);
  for (double lambda : {1e-3, 1e-1, 1.0}) {
    const auto rls = fit_rls(map, x, y, lambda);
    const Vector krr = krr_predict(k, x, y, lambda, q);
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
      const double r = rls.predict(q.row(i).transpose());
      CHECK(std::abs(krr[i] - r) <= 1e-8 * std::max(1.0, std::abs(r)));
    }
  }

  const gp::InnerProductKernel unit(std::make_shared<ConstantFeature>(1));
  sim::Dataset one(1);
  one.add({pt({0.3}), 2.0, 1, std::nullopt, std::nullopt});
  CHECK(krr_predict(unit, one, 1.0, pt({0.9})) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS((void)krr_predict(unit, one, 0.0, pt({0.9})), DomainError);
}

namespace {

sim::Dataset gradient_data(const Matrix& x, const Vector& beta, const FeatureMap& map, int reps) {
  sim::Dataset d(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Point p = x.row(i).transpose();
    d.add({p, beta.dot(map.evaluate(p)), reps, std::nullopt, Vector(map.jacobian(p).transpose() * beta)});
  }
  return d;
}

}  // namespace

TEST_CASE("gradient-augmented generalized least squares") {
  Engine rng(8);
  const auto map = polynomial_features(2, 2);
  const Vector beta = pt({1.0, -2.0, 0.5, 0.3, -0.7, 1.1});
  const Matrix x = random_points(4, 2, rng);
  auto data = gradient_data(x, beta, *map, 3);
  Matrix v(3, 3);
  v << 1.0, 0.4, 0.2, 0.4, 2.0, 0.3, 0.2, 0.3, 1.5;
  CHECK((fit_gls_with_gradients(map, data, v).beta - beta).norm() < 1e-8);

  // identity weights reduce to least squares on the stacked system
  sim::Dataset perturbed(2);
  std::normal_distribution<double> z;
  for (const auto& o : data.observations()) {
    auto p = o;
    p.mean += z(rng);
    *p.grad_mean += pt({z(rng), z(rng)});
    perturbed.add(p);
  }
  const auto gls = fit_gls_with_gradients(map, perturbed, Matrix::Identity(3, 3));
  const auto ols = fit_augmented_ols(map, perturbed);
  CHECK((gls.beta - ols.beta).norm() <= 1e-8 * ols.beta.norm());

  // d = 1, two points, features (1, x): stacked rows (1, x_i) and (0, 1)
  const auto lin = polynomial_features(1, 1);
  sim::Dataset small(1);
  small.add({pt({0.0}), 1.0, 2, std::nullopt, pt({2.5})});
  small.add({pt({1.0}), 2.0, 1, std::nullopt, pt({1.5})});
  Matrix v1(2, 2);
  v1 << 1.0, 0.5, 0.5, 2.0;
  Matrix phi(4, 2);
  phi << 1, 0, 0, 1, 1, 1, 0, 1;
  const Vector yplus = pt({1.0, 2.5, 2.0, 1.5});
  Matrix w = Matrix::Zero(4, 4);
  w.block(0, 0, 2, 2) = v1 / 2.0;
  w.block(2, 2, 2, 2) = v1;
  const Matrix winv = w.inverse();
  const Vector oracle = (phi.transpose() * winv * phi).ldlt().solve(phi.transpose() * winv * yplus);
  CHECK((fit_gls_with_gradients(lin, small, v1).beta - oracle).norm() < 1e-12);

  sim::Dataset nograd(1);
  nograd.add({pt({0.0}), 1.0, 1, std::nullopt, std::nullopt});
  CHECK_THROWS_AS((void)fit_gls_with_gradients(lin, nograd, v1), CapabilityError);
  CHECK_THROWS_AS((void)fit_gls_with_gradients(std::make_shared<ValueOnly>(), small, v1), CapabilityError);
  Matrix bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS((void)fit_gls_with_gradients(lin, small, bad), DomainError);
}

TEST_CASE("GLS coefficients vary less than augmented OLS") {
  const auto model = sim::make_quadratic(2, 1.0);
  const auto map = polynomial_features(2, 2);
  Engine rng(12);
  const Matrix x = random_points(8, 2, rng, -3.0, 3.0);
  const Matrix v = model->value_gradient_noise_cov();
  const int runs = 300;
  Matrix gls(runs, 6);
  Matrix ols(runs, 6);
  RngStream stream(99);
  for (int r = 0; r < runs; ++r) {
    sim::Dataset d(2);
    for (Eigen::Index i = 0; i < x.rows(); ++i) d.add(sim::aggregate(sim::run_replications(*model, x.row(i).transpose(), 2, stream)));
    gls.row(r) = fit_gls_with_gradients(map, d, v).beta.transpose();
    ols.row(r) = fit_augmented_ols(map, d).beta.transpose();
  }
  for (Eigen::Index j = 0; j < 6; ++j) {
    const auto var = [&](const Matrix& m) {
      const double mean = m.col(j).mean();
      return (m.col(j).array() - mean).square().sum() / (runs - 1);
    };
    const double vg = var(gls);
    const double vo = var(ols);
    CHECK(vg <= vo + 3.0 * vo * std::sqrt(2.0 / (runs - 1)));
  }
}

TEST_CASE("linear surrogate descriptor round trip") {
  Engine rng(2);
  const auto map = rbf_features({pt({0.0, 0.0}), pt({1.0, 0.5})}, RbfKind::gaussian, 0.8);
  const Matrix x = random_points(6, 2, rng);
  const auto fit = fit_rls(map, x, Vector::LinSpaced(6, -1.0, 1.0), 0.01);
  const auto back = LinearSurrogate::from_kv(KvDoc::parse(fit.to_kv().serialize()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) CHECK(back.predict(x.row(i).transpose()) == fit.predict(x.row(i).transpose()));
  CHECK(back.kind == FitKind::rls);
}
