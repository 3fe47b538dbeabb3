// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include "simopt/bench/selfcheck.hpp"
#include "simopt/linalg.hpp"
#include "simopt/lowrank/lowrank.hpp"
#include "simopt/opt/gps.hpp"
#include "simopt/opt/local.hpp"
#include "simopt/opt/registry.hpp"
#include "simopt/sim/testbed.hpp"
#include "simopt/surrogates/features.hpp"
#include "simopt/surrogates/linear.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace simopt;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};


Matrix uniform(Eigen::Index n, Eigen::Index d, double lo, double hi, Engine& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = u(rng);
  }
  return x;
}

std::string num(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

Outcome from_check(const bench::CheckResult& c) {
  return {c.pass, c.name + " " + num(c.value) + " (tol " + num(c.tolerance) + ")"};
}

Outcome ridge_gp() { return from_check(bench::check_rls_krr()); }

Outcome kg_update() { return from_check(bench::check_kg_update()); }

Outcome nystrom_chain() {
  const auto a = bench::check_nystrom_induced();
  const auto b = bench::check_nystrom_smoother();
  return {a.pass && b.pass, from_check(a).detail + ", " + from_check(b).detail};
}

Outcome cosine_identity() { return from_check(bench::check_cosine_identity({}, 100000, 10)); }

Outcome rff_convergence() {
  const gp::GaussianKernel kernel(1.0, 1.0);
  Engine rng(51);
  const Matrix xs = uniform(50, 2, -2.0, 2.0, rng);
  const Matrix ys = uniform(50, 2, -2.0, 2.0, rng);
  std::vector<double> errors;
  for (Eigen::Index m : {100, 1000, 10000}) {
    const auto basis = lowrank::spectral_sample(kernel, 2, m, 52);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < 50; ++i) {
      const Point x = xs.row(i).transpose();
      const Point y = ys.row(i).transpose();
      worst = std::max(worst, std::abs(lowrank::rff_kernel_estimate(basis, x, y) - kernel(x, y)));
    }
    errors.push_back(worst);
  }
  // one decade in m shrinks the error by sqrt(10) in expectation; a factor 1.5 of the
  // previous error is the allowance for Monte Carlo noise in the maximum over pairs
  const bool trend = errors[1] <= 1.5 * errors[0] && errors[2] <= 1.5 * errors[1];
  const double slope = lowrank::log_log_slope({100, 1000, 10000}, errors);
  return {errors[2] < 0.05 && trend && slope < 0.0,
          "max error " + num(errors[0]) + " / " + num(errors[1]) + " / " + num(errors[2]) + ", slope " + num(slope)};
}

Outcome negative_variance() {
  Engine rng(2718);
  const Matrix x = uniform(20, 1, 0.0, 10.0, rng);
  const Vector y = uniform(20, 1, -1.0, 1.0, rng).col(0);
  const Vector noise = Vector::Constant(20, 1e-2);
  const auto active = lowrank::select_active_set(20, 3, rng);
  const gp::GpPrior prior{gp::MeanFunction::constant(0.0), std::make_shared<gp::GaussianKernel>(1.0, 1.0)};
  const lowrank::NystromNaivePosterior naive(prior, x, y, noise, active);
  const lowrank::NystromKernelPosterior induced(prior, x, y, noise, active);
  Engine qrng(1);
  const Matrix q = uniform(1000, 1, 0.0, 10.0, qrng);
  double naive_min = 1e300;
  double induced_min = 1e300;
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    const Point a = q.row(i).transpose();
    naive_min = std::min(naive_min, naive.var_at(a));
    induced_min = std::min(induced_min, induced.var_at(a));
  }
  return {naive_min < 0.0 && induced_min >= 0.0,
          "min variance naive " + num(naive_min) + ", induced kernel " + num(induced_min)};
}

Outcome complexity() {
  std::string detail;
  bool pass = true;
  for (const std::string variant : {"nystrom_naive", "nystrom_kernel", "rff"}) {
    const auto r = lowrank::scaling_report(variant, {2000, 4000, 8000}, 50, 5, 1);
    pass = pass && r.slope <= 1.4;
    detail += variant + " slope " + num(r.slope) + ", ";
  }
  const auto exact = lowrank::scaling_report("exact", {500, 1000, 2000}, 0, 5, 1);
  pass = pass && exact.slope >= 2.2;
  return {pass, detail + "exact slope " + num(exact.slope)};
}

Vector true_gradient(const sim::SimulationModel& m, const Point& x) {
  Vector g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Point a = x;
    Point b = x;
    a[j] += 1e-5;
    b[j] -= 1e-5;
    g[j] = (*m.true_mean(a) - *m.true_mean(b)) / 2e-5;
  }
  return g;
}

Outcome strong_stationarity() {
  const auto clean = sim::make_quadratic(2, 0.0);
  const auto t = opt::strong_run(*clean, {}, 200, 1);
  const double grad = true_gradient(*clean, t.recommendation).norm();
  const auto noisy = sim::make_quadratic(2, 0.1);
  int close = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto r = opt::strong_run(*noisy, {}, 2000, seed);
    close += (r.recommendation - *noisy->known_argmax()).norm() <= 0.1 ? 1 : 0;
  }
  return {grad < 1e-2 && t.consumed <= 200 && close >= 18,
          "noise-free gradient norm " + num(grad) + " after " + std::to_string(t.consumed) + " evaluations, noisy " +
              std::to_string(close) + "/20 within 0.1"};
}

Outcome global_methods() {
  bool pass = true;
  std::string detail;
  const auto one = sim::make_multimodal_1d(0.1);
  const auto two = sim::make_multimodal_2d(0.1);
  for (const std::string id : {"kg", "ucb", "gps"}) {
    int c1 = 0;
    int c2 = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto a = opt::run_algorithm(id, *one, {}, 200, seed);
      c1 += (a.recommendation - *one->known_argmax()).norm() <= 0.1 ? 1 : 0;
      const auto b = opt::run_algorithm(id, *two, {}, 500, seed);
      c2 += (b.recommendation - *two->known_argmax()).norm() <= 0.2 ? 1 : 0;
    }
    pass = pass && c1 >= 18 && c2 >= 15;
    detail += id + " " + std::to_string(c1) + "/20 (1-D) " + std::to_string(c2) + "/20 (2-D); ";
  }
  detail.resize(detail.size() - 2);
  return {pass, detail};
}

Outcome gps_interpolation() {
  Engine rng(10);
  const auto kernel = std::make_shared<gp::MaternKernel>(1.0, 0.3, 5);
  bool exact = true;
  const auto before = linalg::factorization_count();
  for (int inst = 0; inst < 20; ++inst) {
    const auto n = std::uniform_int_distribution<Eigen::Index>(1, 40)(rng);
    const auto d = std::uniform_int_distribution<Eigen::Index>(1, 3)(rng);
    const Matrix x = uniform(n, d, 0.0, 1.0, rng);
    const Vector y = uniform(n, 1, -5.0, 5.0, rng).col(0);
    const Vector noise = uniform(n, 1, 0.0, 0.5, rng).col(0);
    const opt::GpsModel model(kernel, x, y, noise, opt::inverse_distance_weights());
    for (Eigen::Index i = 0; i < n; ++i) exact = exact && model.mean_at(x.row(i).transpose()) == y[i];
    const Matrix q = uniform(50, d, 0.0, 1.0, rng);
    for (Eigen::Index i = 0; i < q.rows(); ++i) (void)model.var_at(q.row(i).transpose());
  }
  const auto calls = linalg::factorization_count() - before;
  return {exact && calls == 0,
          std::string("interpolation ") + (exact ? "exact" : "inexact") + ", factorizations " + std::to_string(calls)};
}

Outcome gls_efficiency() {
  const auto model = sim::make_quadratic(2, 1.0);
  const auto map = surrogates::polynomial_features(2, 2);
  Engine rng(11);
  const Matrix x = uniform(8, 2, -3.0, 3.0, rng);
  const Matrix v = model->value_gradient_noise_cov();
  const int runs = 500;
  const Eigen::Index p = map->size();
  Matrix gls(runs, p);
  Matrix ols(runs, p);
  RngStream stream(2024);
  for (int r = 0; r < runs; ++r) {
    sim::Dataset d(2);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      d.add(sim::aggregate(sim::run_replications(*model, x.row(i).transpose(), 2, stream)));
    }
    gls.row(r) = surrogates::fit_gls_with_gradients(map, d, v).beta.transpose();
    ols.row(r) = surrogates::fit_augmented_ols(map, d).beta.transpose();
  }
  bool pass = true;
  double worst = -1e300;
  for (Eigen::Index j = 0; j < p; ++j) {
    // paired squared deviations give the standard error of the variance difference
    const Vector a = (gls.col(j).array() - gls.col(j).mean()).square();
    const Vector b = (ols.col(j).array() - ols.col(j).mean()).square();
    const Vector diff = a - b;
    const double se = std::sqrt((diff.array() - diff.mean()).square().sum() / (runs - 1) / runs);
    const double excess = (diff.mean() * runs / (runs - 1)) / se;
    worst = std::max(worst, excess);
    pass = pass && excess <= 3.0;
  }
  return {pass, "largest (var GLS - var OLS) / SE over coefficients " + num(worst)};
}

Outcome selfcheck() {
  const auto checks = bench::run_selfcheck();
  std::string failed;
  for (const auto& c : checks) {
    if (!c.pass) failed += " " + c.name;
  }
  return {failed.empty(), std::to_string(checks.size()) + " checks" + (failed.empty() ? " pass" : ", failed:" + failed)};
}

struct Criterion {
  const char* name;
  double limit_s;  // 0: no runtime limit
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"ridge regression equals the GP predictor", 5, ridge_gp},
      {"KG updating scheme", 5, kg_update},
      {"Nystrom induced-kernel chain", 10, nystrom_chain},
      {"cosine identity", 10, cosine_identity},
      {"RFF kernel convergence", 20, rff_convergence},
      {"negative Nystrom variance", 0, negative_variance},
      {"low-rank complexity", 180, complexity},
      {"STRONG stationarity", 120, strong_stationarity},
      {"global methods on constructed ground truth", 600, global_methods},
      {"GPS interpolation without factorization", 0, gps_interpolation},
      {"GLS efficiency", 60, gls_efficiency},
      {"selfcheck battery", 60, selfcheck},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& c = criteria[i];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.limit_s <= 0 || s < c.limit_s;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    std::printf("%s %2zu %s: %s (%.2f s%s)\n", pass ? "PASS" : "FAIL", i + 1, c.name, o.detail.c_str(), s,
                in_time ? "" : ", over the time limit");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
