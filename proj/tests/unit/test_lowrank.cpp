#include "simopt/linalg.hpp"
#include "simopt/lowrank/lowrank.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

using namespace simopt;
using namespace simopt::lowrank;

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

gp::GpPrior gaussian_prior(double tau, double eta, double c = 0.0) {
  return {gp::MeanFunction::constant(c), std::make_shared<gp::GaussianKernel>(tau, eta)};
}

Matrix rows_of(const Matrix& x, const ActiveSet& a) {
  Matrix out(a.size(), x.cols());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.row(i) = x.row(a.indices[static_cast<std::size_t>(i)]);
  return out;
}

// 20 points on [0, 10] with 3 anchors and small noise: the substituted K~ misses most
// of the data, so k(x)^T (K~ + Sigma)^{-1} k(x) overshoots K(x, x) near unanchored points.
struct NegativeFixture {
  gp::GpPrior prior = gaussian_prior(1.0, 1.0);
  Matrix x;
  Vector y;
  Vector noise;
  ActiveSet active;
};

NegativeFixture negative_fixture() {
  NegativeFixture f;
  Engine rng(2718);
  f.x = random_points(20, 1, rng, 0.0, 10.0);
  f.y = random_vector(20, rng);
  f.noise = Vector::Constant(20, 1e-2);
  f.active = select_active_set(20, 3, rng);
  return f;
}

}  // namespace

TEST_CASE("woodbury solve") {
  Engine rng(1);
  const Vector sigma = random_vector(6, rng, 0.5, 2.0);
  const Vector b = random_vector(6, rng);
  const Vector plain =
      woodbury_solve(sigma, Matrix::Zero(6, 2), Matrix::Identity(2, 2), Matrix::Zero(2, 6), b);
  CHECK((plain - b.cwiseQuotient(sigma)).norm() < 1e-15);

  for (int inst = 0; inst < 50; ++inst) {
    const auto n = std::uniform_int_distribution<Eigen::Index>(8, 20)(rng);
    const auto m = std::uniform_int_distribution<Eigen::Index>(1, 8)(rng);
    const Vector s = random_vector(n, rng, 0.5, 2.0);
    const Matrix u = random_points(n, m, rng, -1.0, 1.0);
    const Matrix v = random_points(m, n, rng, -1.0, 1.0);
    const Matrix g = random_points(m, m, rng, -1.0, 1.0);
    const Matrix c = g * g.transpose() + Matrix::Identity(m, m);
    const Vector rhs = random_vector(n, rng);
    Matrix dense = u * c * v;
    dense.diagonal() += s;
    const Vector oracle = dense.inverse() * rhs;
    CHECK((woodbury_solve(s, u, c, v, rhs) - oracle).norm() <= 1e-9 * oracle.norm());
  }

  const Matrix x = random_points(10, 2, rng);
  const Matrix k = gp::GaussianKernel(1.0, 0.2).gram(x);
  const Vector s = Vector::Constant(10, 0.1);
  const Vector rhs = random_vector(10, rng);
  Matrix dense = k;
  dense.diagonal() += s;
  const Vector oracle = dense.llt().solve(rhs);
  CHECK((woodbury_solve(s, Matrix::Identity(10, 10), k, Matrix::Identity(10, 10), rhs) - oracle).norm() <=
        1e-8 * oracle.norm());

  CHECK_THROWS_AS((void)woodbury_solve(s, Matrix::Identity(10, 2), Matrix::Zero(2, 2), Matrix::Identity(2, 10), rhs),
                  FactorizationError);
}

TEST_CASE("active set sampling") {
  Engine rng(3);
  const auto all = select_active_set(7, 7, rng);
  CHECK(std::set<Eigen::Index>(all.indices.begin(), all.indices.end()) == std::set<Eigen::Index>{0, 1, 2, 3, 4, 5, 6});
  Engine a(11);
  Engine b(11);
  CHECK(select_active_set(10, 1, a).indices == select_active_set(10, 1, b).indices);
  CHECK_THROWS_AS((void)select_active_set(3, 4, rng), DomainError);

  std::vector<int> counts(5, 0);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) ++counts[static_cast<std::size_t>(select_active_set(5, 1, rng).indices[0])];
  const double sd = std::sqrt(draws * 0.2 * 0.8);
  for (int c : counts) CHECK(std::abs(c - draws * 0.2) <= 5.0 * sd);
}

TEST_CASE("nystrom variants at full rank reproduce the exact posterior") {
  Engine rng(4);
  const auto prior = gaussian_prior(1.1, 0.3, 0.5);
  const Matrix x = random_points(25, 2, rng);
  const Vector y = random_vector(25, rng);
  const Vector noise = random_vector(25, rng, 0.02, 0.1);
  const gp::GpPosterior exact(prior, x, y, noise);
  const auto full = full_active_set(25);
  const NystromNaivePosterior naive(prior, x, y, noise, full);
  const NystromKernelPosterior induced(prior, x, y, noise, full);
  const Matrix q = random_points(20, 2, rng);
  for (Eigen::Index i = 0; i < 20; ++i) {
    const Point a = q.row(i).transpose();
    CHECK(std::abs(naive.mean_at(a) - exact.mean_at(a)) < 1e-6);
    CHECK(std::abs(induced.mean_at(a) - exact.mean_at(a)) < 1e-6);
    CHECK(std::abs(naive.var_at(a) - exact.var_at(a)) < 1e-6);
    CHECK(std::abs(induced.var_at(a) - exact.var_at(a)) < 1e-6);
  }
}

TEST_CASE("naive nystrom matches the dense substitution oracle") {
  Engine rng(5);
  for (int inst = 0; inst < 5; ++inst) {
    const auto prior = gaussian_prior(1.0, 0.25, -0.3);
    const Matrix x = random_points(50, 2, rng);
    const Vector y = random_vector(50, rng);
    const Vector noise = random_vector(50, rng, 0.05, 0.2);
    const auto active = select_active_set(50, 10, rng);
    const NystromNaivePosterior naive(prior, x, y, noise, active);
    const Matrix anchors = rows_of(x, active);
    const Matrix knm = prior.kernel->cross(x, anchors);
    Matrix kt = knm * prior.kernel->gram(anchors).ldlt().solve(knm.transpose());
    kt.diagonal() += noise;
    const Eigen::PartialPivLU<Matrix> lu(kt);
    const Vector w = lu.solve(Vector(y.array() + 0.3));
    const Matrix q = random_points(20, 2, rng);
    for (Eigen::Index i = 0; i < 20; ++i) {
      const Point a = q.row(i).transpose();
      const Vector ka = prior.kernel->cross(x, a);
      CHECK(std::abs(naive.mean_at(a) - (-0.3 + ka.dot(w))) < 1e-7);
      CHECK(std::abs(naive.variance_report(a).value - (1.0 - ka.dot(lu.solve(ka)))) < 1e-7);
    }
  }
}

TEST_CASE("naive nystrom reports negative variances; the induced-kernel variant does not") {
  const auto f = negative_fixture();
  const NystromNaivePosterior naive(f.prior, f.x, f.y, f.noise, f.active);
  const NystromKernelPosterior induced(f.prior, f.x, f.y, f.noise, f.active);
  Engine rng(1);
  const Matrix q = random_points(1000, 1, rng, 0.0, 10.0);
  int negative = 0;
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    const Point a = q.row(i).transpose();
    const auto r = naive.variance_report(a);
    if (r.value < 0.0) {
      ++negative;
      CHECK(r.negative);
      CHECK(naive.var_at(a) < 0.0);
    }
    CHECK(induced.var_at(a) >= 0.0);
    CHECK_FALSE(induced.variance_report(a).negative);
  }
  CHECK(negative > 0);
}

TEST_CASE("induced-kernel nystrom variance is nonnegative on random instances") {
  Engine rng(6);
  for (int inst = 0; inst < 5; ++inst) {
    const auto prior = gaussian_prior(1.0, 0.5);
    const Matrix x = random_points(60, 2, rng, 0.0, 5.0);
    const Vector noise = Vector::Constant(60, 1e-3);
    const NystromKernelPosterior post(prior, x, random_vector(60, rng), noise, select_active_set(60, 8, rng));
    const Matrix q = random_points(1000, 2, rng, 0.0, 5.0);
    for (Eigen::Index i = 0; i < q.rows(); ++i) CHECK(post.var_at(Point(q.row(i).transpose())) >= 0.0);
  }
}

TEST_CASE("induced-kernel nystrom matches the dense induced-kernel oracle") {
  Engine rng(7);
  const auto prior = gaussian_prior(0.9, 0.3, 0.1);
  const Matrix x = random_points(50, 2, rng);
  const Vector y = random_vector(50, rng);
  const Vector noise = random_vector(50, rng, 0.05, 0.2);
  const auto active = select_active_set(50, 10, rng);
  const NystromKernelPosterior post(prior, x, y, noise, active);
  const auto induced = std::make_shared<NystromInducedKernel>(prior.kernel, rows_of(x, active));
  const gp::GpPosterior oracle({prior.mean, induced}, x, y, noise);
  Matrix kt = induced->gram(x);
  kt.diagonal() += noise;
  const Eigen::PartialPivLU<Matrix> lu_t(Matrix(kt.transpose()));
  const Matrix q = random_points(20, 2, rng);
  for (Eigen::Index i = 0; i < 20; ++i) {
    const Point a = q.row(i).transpose();
    CHECK(std::abs(post.mean_at(a) - oracle.mean_at(a)) < 1e-7);
    const double lead = (*prior.kernel)(a, a) - (*induced)(a, a);
    CHECK(std::abs(post.cov_at(a, a) - (lead + oracle.raw_var_at(a))) < 1e-7);
    CHECK((post.smoother_row(a) - lu_t.solve(induced->cross(x, a))).cwiseAbs().maxCoeff() < 1e-8);
    for (Eigen::Index j = 0; j < 20; ++j) {
      const Point b = q.row(j).transpose();
      CHECK(post.cov_at(a, b) == post.cov_at(b, a));
    }
  }
}

TEST_CASE("the two nystrom variants differ below full rank") {
  Engine rng(8);
  const auto prior = gaussian_prior(1.0, 0.3);
  const Matrix x = random_points(40, 1, rng);
  const Vector y = random_vector(40, rng);
  const Vector noise = Vector::Constant(40, 0.05);
  const auto active = select_active_set(40, 5, rng);
  const NystromNaivePosterior naive(prior, x, y, noise, active);
  const NystromKernelPosterior induced(prior, x, y, noise, active);
  double gap = 0.0;
  for (double v = 0.0; v <= 1.0; v += 0.05) gap = std::max(gap, std::abs(naive.mean_at(pt({v})) - induced.mean_at(pt({v}))));
  CHECK(gap > 1e-3);
}

TEST_CASE("spectral sampling") {
  const gp::GaussianKernel g(1.0, 1.0);
  const auto basis = spectral_sample(g, 3, 10000, 42);
  const Matrix c = basis.omegas.transpose() * basis.omegas / 10000.0;
  for (Eigen::Index j = 0; j < 3; ++j) CHECK(std::abs(c(j, j) - 1.0) < 0.05);

  std::vector<int> bins(10, 0);
  for (Eigen::Index t = 0; t < basis.m(); ++t) {
    const double b = basis.phases[t];
    CHECK(b > 0.0);
    CHECK(b < 2.0 * std::numbers::pi);
    ++bins[static_cast<std::size_t>(b / (0.2 * std::numbers::pi))];
  }
  double chi2 = 0.0;
  for (int n : bins) chi2 += (n - 1000.0) * (n - 1000.0) / 1000.0;
  CHECK(chi2 < 21.666);  // chi-square(9) upper 1% point

  const auto again = spectral_sample(g, 3, 10000, 42);
  CHECK(again.omegas == basis.omegas);
  CHECK(again.phases == basis.phases);

  const auto back = RffBasis::from_kv(KvDoc::parse(basis.to_kv().serialize()));
  CHECK(back.omegas == basis.omegas);
  CHECK(back.phases == basis.phases);

  const gp::GibfKernel gibf({0}, {pt({1, 1})});
  CHECK_THROWS_AS((void)spectral_sample(gibf, 1, 10, 1), CapabilityError);
}

TEST_CASE("random feature kernel estimates") {
  const gp::GaussianKernel g(1.0, 1.0);
  std::vector<double> at_zero;
  for (std::uint64_t s = 0; s < 1000; ++s) at_zero.push_back(rff_kernel_estimate(spectral_sample(g, 1, 10, s), pt({0}), pt({0})));
  double mean = 0.0;
  for (double v : at_zero) mean += v / 1000.0;
  double var = 0.0;
  for (double v : at_zero) var += (v - mean) * (v - mean) / 999.0;
  CHECK(std::abs(mean - 1.0) <= 3.0 * std::sqrt(var / 1000.0));

  const auto big = spectral_sample(g, 2, 10000, 5);
  const Point a = pt({0.3, 0.1});
  const Point b = pt({0.9, 0.9});
  CHECK(std::abs(rff_kernel_estimate(big, a, b) - std::exp(-0.5)) < 0.03);
  CHECK(rff_kernel_estimate(big, a, b) == rff_kernel_estimate(big, b, a));

  // Matern 3/2 through the Student t measure
  const gp::MaternKernel m(1.0, 0.8, 3);
  const auto mb = spectral_sample(m, 2, 100000, 9);
  CHECK(std::abs(rff_kernel_estimate(mb, a, b) - m(a, b)) < 0.02);
}

TEST_CASE("random feature posterior") {
  Engine rng(9);
  const auto prior = gaussian_prior(1.0, 0.4, 0.7);
  const Matrix x = random_points(40, 2, rng);
  const Vector noise = random_vector(40, rng, 0.05, 0.2);
  const auto basis = spectral_sample(*prior.kernel, 2, 15, 3);

  const RffPosterior flat(prior, x, Vector::Constant(40, 0.7), noise, basis);
  CHECK(flat.mean_at(pt({0.2, 0.4})) == doctest::Approx(0.7).epsilon(1e-14));

  const Vector y = random_vector(40, rng);
  const RffPosterior post(prior, x, y, noise, basis);
  const auto kt = std::make_shared<RffInducedKernel>(basis);
  const gp::GpPosterior oracle({prior.mean, kt}, x, y, noise);
  const Matrix q = random_points(20, 2, rng);
  for (Eigen::Index i = 0; i < 20; ++i) {
    const Point a = q.row(i).transpose();
    CHECK(std::abs(post.mean_at(a) - oracle.mean_at(a)) < 1e-7);
    for (Eigen::Index j = 0; j < 20; ++j) {
      const Point b = q.row(j).transpose();
      const double expected = (*prior.kernel)(a, b) - (*kt)(a, b) + oracle.cov_at(a, b);
      CHECK(std::abs(post.cov_at(a, b) - expected) < 1e-7);
      CHECK(post.cov_at(a, b) == post.cov_at(b, a));
    }
    CHECK(post.var_at(a) >= 0.0);
  }
}

TEST_CASE("random feature posterior mean approaches the exact one") {
  Engine rng(10);
  const auto prior = gaussian_prior(1.0, 0.5);
  const Matrix x = random_points(30, 2, rng);
  const Vector y = random_vector(30, rng);
  const Vector noise = Vector::Constant(30, 0.05);
  const gp::GpPosterior exact(prior, x, y, noise);
  const Matrix q = random_points(20, 2, rng);
  std::vector<double> err;
  for (Eigen::Index m : {100, 1000, 10000}) {
    const RffPosterior post(prior, x, y, noise, spectral_sample(*prior.kernel, 2, m, 17));
    double e = 0.0;
    for (Eigen::Index i = 0; i < 20; ++i) {
      const Point a = q.row(i).transpose();
      e = std::max(e, std::abs(post.mean_at(a) - exact.mean_at(a)));
    }
    err.push_back(e);
  }
  // the Monte Carlo error shrinks like 1/sqrt(m); allow a factor 1.5 of slack per step
  CHECK(err[1] <= 1.5 * err[0]);
  CHECK(err[2] <= 1.5 * err[1]);
  CHECK(err[2] < 0.05);
}

TEST_CASE("low-rank construction never allocates an n x n block") {
  Engine rng(11);
  const Eigen::Index n = 1500;
  const Eigen::Index m = 20;
  const auto prior = gaussian_prior(1.0, 0.5);
  const Matrix x = random_points(n, 2, rng, 0.0, 10.0);
  const Vector y = random_vector(n, rng);
  const Vector noise = Vector::Constant(n, 0.01);
  for (const std::string variant : {"nystrom_naive", "nystrom_kernel", "rff"}) {
    linalg::reset_max_recorded_block();
    const auto post = make_approx(variant, prior, x, y, noise, m, 3);
    (void)post->mean_at(pt({1.0, 1.0}));
    (void)post->var_at(pt({1.0, 1.0}));
    CHECK(linalg::max_recorded_block() > 0);
    CHECK(linalg::max_recorded_block() <= static_cast<std::uint64_t>(n * m));
  }
  CHECK_THROWS_AS((void)make_approx("bogus", prior, x, y, noise, m, 3), ConfigError);
}

TEST_CASE("scaling report content is deterministic") {
  const auto a = scaling_report("nystrom_kernel", {200, 400}, 10, 1, 3);
  const auto b = scaling_report("nystrom_kernel", {200, 400}, 10, 1, 3);
  REQUIRE(a.rows.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(a.rows[i].variant == b.rows[i].variant);
    CHECK(a.rows[i].n == b.rows[i].n);
    CHECK(a.rows[i].m == b.rows[i].m);
  }
  std::ostringstream out;
  a.write(out);
  CHECK(out.str().rfind("variant,n,m,build_ms,query_ms\n", 0) == 0);
  CHECK(log_log_slope({1.0, 2.0, 4.0}, {3.0, 12.0, 48.0}) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("rank selection stops when held-out error stops improving") {
  const auto data = synthetic_regression(300, 1, 4);
  const auto sel = choose_m("nystrom_kernel", gaussian_prior(1.0, 1.5), data.points, data.y, data.noise,
                            {5, 10, 20, 40, 80, 160}, 0.2, 0.01, 8);
  CHECK(sel.tried.size() == sel.holdout_rmse.size());
  CHECK(std::find(sel.tried.begin(), sel.tried.end(), sel.m) != sel.tried.end());
  CHECK(sel.holdout_rmse.front() > sel.holdout_rmse[1]);
}

TEST_CASE("random feature posterior with more features than observations") {
  Engine rng(12);
  const auto prior = gaussian_prior(1.0, 0.4);
  const Matrix x = random_points(12, 2, rng);
  const Vector y = random_vector(12, rng);
  const Vector noise = Vector::Constant(12, 0.1);
  const auto basis = spectral_sample(*prior.kernel, 2, 60, 4);
  const RffPosterior post(prior, x, y, noise, basis);
  const auto kt = std::make_shared<RffInducedKernel>(basis);
  const gp::GpPosterior oracle({prior.mean, kt}, x, y, noise);
  const Matrix q = random_points(10, 2, rng);
  for (Eigen::Index i = 0; i < 10; ++i) {
    const Point a = q.row(i).transpose();
    CHECK(std::abs(post.mean_at(a) - oracle.mean_at(a)) < 1e-7);
    const double expected = (*prior.kernel)(a, a) - (*kt)(a, a) + oracle.cov_at(a, a);
    CHECK(std::abs(post.cov_at(a, a) - expected) < 1e-7);
  }
}
