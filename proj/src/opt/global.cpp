#include "simopt/opt/global.hpp"

#include "simopt/numopt.hpp"
#include "simopt/opt/acquisition.hpp"
#include "simopt/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace simopt::opt {

GlobalConfig GlobalConfig::from_kv(const KvDoc& doc) {
  check_config_keys(doc,
                    {"acquisition", "initial_points", "reps_per_point", "batch", "kernel", "two_nu", "hyper_restarts",
                     "refit_growth", "noise_shrink", "noise_floor", "grid_per_dim", "ucb_a", "saa_samples",
                     "gps_sampler", "mcmc_width", "mcmc_burn_in", "mcmc_thin", "gps_smoothing", "refine_final"},
                    "global optimizer config");
  GlobalConfig c;
  c.acquisition = doc.get_string("acquisition", c.acquisition);
  c.initial_points = static_cast<int>(doc.get_int("initial_points", c.initial_points));
  c.reps_per_point = static_cast<int>(doc.get_int("reps_per_point", c.reps_per_point));
  c.batch = static_cast<int>(doc.get_int("batch", c.batch));
  c.kernel = doc.get_string("kernel", c.kernel);
  c.two_nu = static_cast<int>(doc.get_int("two_nu", c.two_nu));
  c.hyper_restarts = static_cast<int>(doc.get_int("hyper_restarts", c.hyper_restarts));
  c.refit_growth = doc.get_double("refit_growth", c.refit_growth);
  c.noise_shrink = doc.get_double("noise_shrink", c.noise_shrink);
  c.noise_floor = doc.get_double("noise_floor", c.noise_floor);
  c.grid_per_dim = static_cast<int>(doc.get_int("grid_per_dim", c.grid_per_dim));
  c.ucb_a = doc.get_double("ucb_a", c.ucb_a);
  c.saa_samples = static_cast<int>(doc.get_int("saa_samples", c.saa_samples));
  const auto sampler = doc.get_string("gps_sampler", "acceptance_rejection");
  if (sampler == "acceptance_rejection") {
    c.gps_sampler.kind = GpsSamplerKind::acceptance_rejection;
  } else if (sampler == "mcmc") {
    c.gps_sampler.kind = GpsSamplerKind::mcmc;
  } else {
    throw ConfigError("global optimizer config: gps_sampler must be acceptance_rejection or mcmc");
  }
  c.gps_sampler.width = static_cast<int>(doc.get_int("mcmc_width", c.gps_sampler.width));
  c.gps_sampler.burn_in = static_cast<int>(doc.get_int("mcmc_burn_in", c.gps_sampler.burn_in));
  c.gps_sampler.thin = static_cast<int>(doc.get_int("mcmc_thin", c.gps_sampler.thin));
  c.gps_smoothing = doc.get_bool("gps_smoothing", c.gps_smoothing);
  c.refine_final = doc.get_bool("refine_final", c.refine_final);
  return c;
}

KvDoc GlobalConfig::to_kv() const {
  KvDoc d;
  d.set("acquisition", acquisition);
  d.set("initial_points", initial_points);
  d.set("reps_per_point", reps_per_point);
  d.set("batch", batch);
  d.set("kernel", kernel);
  d.set("two_nu", two_nu);
  d.set("hyper_restarts", hyper_restarts);
  d.set("refit_growth", refit_growth);
  d.set("noise_shrink", noise_shrink);
  d.set("noise_floor", noise_floor);
  d.set("grid_per_dim", grid_per_dim);
  d.set("ucb_a", ucb_a);
  d.set("saa_samples", saa_samples);
  d.set("gps_sampler", gps_sampler.kind == GpsSamplerKind::mcmc ? "mcmc" : "acceptance_rejection");
  d.set("mcmc_width", gps_sampler.width);
  d.set("mcmc_burn_in", gps_sampler.burn_in);
  d.set("mcmc_thin", gps_sampler.thin);
  d.set("gps_smoothing", gps_smoothing ? "true" : "false");
  d.set("refine_final", refine_final ? "true" : "false");
  return d;
}

void PointData::add(const sim::ReplicationSet& reps) {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (points_[i] == reps.point) {
      outputs_[i].insert(outputs_[i].end(), reps.outputs.begin(), reps.outputs.end());
      return;
    }
  }
  points_.push_back(reps.point);
  outputs_.push_back(reps.outputs);
}

Matrix PointData::points() const {
  Matrix m(static_cast<Eigen::Index>(points_.size()), dim_);
  for (std::size_t i = 0; i < points_.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = points_[i].transpose();
  return m;
}

Vector PointData::means() const {
  Vector m(static_cast<Eigen::Index>(outputs_.size()));
  for (std::size_t i = 0; i < outputs_.size(); ++i) m[static_cast<Eigen::Index>(i)] = stats::mean_var(outputs_[i]).mean;
  return m;
}

Vector PointData::noise(double shrink, double floor) const {
  const auto n = static_cast<Eigen::Index>(outputs_.size());
  Vector v = Vector::Constant(n, -1.0);
  std::vector<double> known;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& o = outputs_[static_cast<std::size_t>(i)];
    if (o.size() >= 2) {
      v[i] = stats::mean_var(o).variance / static_cast<double>(o.size());
      known.push_back(v[i]);
    }
  }
  double median = 0.0;
  if (!known.empty()) {
    std::nth_element(known.begin(), known.begin() + static_cast<long>(known.size() / 2), known.end());
    median = known[known.size() / 2];
  }
  for (Eigen::Index i = 0; i < n; ++i) v[i] = std::max({v[i] < 0.0 ? median : v[i], shrink * median, floor});
  return v;
}

gp::HyperFit fit_stationary_prior(const std::string& kernel, int two_nu, const Matrix& points, const Vector& y,
                                  const Vector& noise, const Box& box, int restarts, Engine& rng,
                                  std::optional<Vector> warm_start) {
  const double mean = y.mean();
  double spread = std::sqrt((y.array() - mean).square().mean());
  if (!(spread > 0.0) || !std::isfinite(spread)) spread = 1.0;
  const double diag = box.diagonal();
  const double wmin = box.width().minCoeff();
  gp::KernelPtr base;
  if (kernel == "gaussian") {
    base = std::make_shared<gp::GaussianKernel>(spread, 0.2 * diag);
  } else if (kernel == "matern") {
    base = std::make_shared<gp::MaternKernel>(spread, 0.2 * diag, two_nu);
  } else {
    throw ConfigError("kernel must be gaussian or matern, got '" + kernel + "'");
  }
  gp::PriorFamily family{base, gp::MeanFunction::constant(mean), false};
  const auto bounds = gp::stationary_bounds(0.05 * spread, 20.0 * spread, 0.01 * wmin, 2.0 * diag);
  gp::HyperFitOptions options;
  options.restarts = restarts;
  if (warm_start) options.extra_start = warm_start->cwiseMax(bounds.lower).cwiseMin(bounds.upper);
  return gp::fit_hyperparameters(family, points, y, noise, bounds, rng, options);
}

namespace {

class Fitter {
 public:
  Fitter(const GlobalConfig& cfg, const Box& box, Engine rng) : cfg_(&cfg), box_(&box), rng_(rng) {}

  const gp::GpPrior& prior(const Matrix& x, const Vector& y, const Vector& noise) {
    const auto n = static_cast<double>(x.rows());
    if (!theta_ || n >= cfg_->refit_growth * n_last_) {
      auto fit = fit_stationary_prior(cfg_->kernel, cfg_->two_nu, x, y, noise, *box_, cfg_->hyper_restarts, rng_,
                                      theta_);
      theta_ = fit.theta;
      n_last_ = n;
      kernel_ = fit.prior.kernel;
      mean_ = fit.prior.mean;
    }
    prior_ = gp::GpPrior{mean_, kernel_};
    return prior_;
  }

 private:
  const GlobalConfig* cfg_;
  const Box* box_;
  Engine rng_;
  std::optional<Vector> theta_;
  double n_last_ = 0.0;
  gp::KernelPtr kernel_;
  gp::MeanFunction mean_;
  gp::GpPrior prior_;
};

Matrix candidate_grid(const GlobalConfig& cfg, const Box& box, const Matrix& data, Engine rng) {
  const auto d = box.dim();
  const Matrix lhs = numopt::latin_hypercube(cfg.grid_per_dim * d, box, rng);
  Matrix grid(lhs.rows() + data.rows(), d);
  grid << lhs, data;
  return grid;
}

/// Indices of the `count` largest scores, ties to the lower index.
std::vector<Eigen::Index> top_indices(const Vector& scores, int count) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(scores.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return scores[a] > scores[b]; });
  idx.resize(std::min(idx.size(), static_cast<std::size_t>(count)));
  return idx;
}

double median(Vector v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

struct Choice {
  Point x;
  double criterion;
};

}  // namespace

OptimizationTrace sequential_template(const sim::SimulationModel& model, const GlobalConfig& cfg, long budget,
                                      std::uint64_t seed) {
  const auto& acq = cfg.acquisition;
  if (acq != "kg" && acq != "kg_saa" && acq != "ucb" && acq != "gps") {
    throw ConfigError("acquisition must be kg, kg_saa, ucb or gps, got '" + acq + "'");
  }
  if (cfg.reps_per_point < 1 || cfg.batch < 1 || cfg.grid_per_dim < 1) {
    throw ConfigError("reps_per_point, batch and grid_per_dim must be positive");
  }
  RunContext ctx(model, budget, seed, acq);
  const auto& box = ctx.box();
  const auto d = ctx.dim();
  const int n0 = cfg.initial_points > 0 ? cfg.initial_points : 10 * static_cast<int>(d);
  if (static_cast<long>(n0) * cfg.reps_per_point > budget) {
    throw DomainError("sequential template: budget is smaller than the initial design");
  }

  PointData data(d);
  Engine design_rng = ctx.engine(0);
  const Matrix initial = numopt::latin_hypercube(n0, box, design_rng);
  for (Eigen::Index i = 0; i < initial.rows(); ++i) data.add(ctx.sample(initial.row(i).transpose(), cfg.reps_per_point, 0));

  Fitter fitter(cfg, box, ctx.engine(1));
  long iter = 0;
  while (ctx.budget().remaining() > 0) {
    ++iter;
    const Matrix x = data.points();
    const Vector y = data.means();
    const Vector noise = data.noise(cfg.noise_shrink, cfg.noise_floor);
    const auto& prior = fitter.prior(x, y, noise);
    const Matrix grid = candidate_grid(cfg, box, x, ctx.engine(1000 + static_cast<std::uint64_t>(iter)));
    std::vector<Choice> chosen;

    if (acq == "gps") {
      const GpsModel gps(prior.kernel, x, y, noise, inverse_distance_weights());
      Eigen::Index best = 0;
      const double c = y.maxCoeff(&best);
      ctx.set_incumbent(x.row(best).transpose(), c);
      const Vector w = gps_tail_weights(gps, c, grid);
      const auto density = normalize_density(w);
      Engine srng = ctx.engine(2000 + static_cast<std::uint64_t>(iter));
      for (const auto i : gps_sample(density.weights, cfg.gps_sampler, cfg.batch, srng)) {
        Point p = grid.row(i).transpose();
        if (cfg.gps_smoothing) {
          std::normal_distribution<double> normal;
          const Vector h = box.width() / static_cast<double>(cfg.grid_per_dim * d);
          for (Eigen::Index j = 0; j < d; ++j) p[j] += h[j] * normal(srng);
          p = box.project(p);
        }
        chosen.push_back({p, density.weights[i]});
      }
    } else {
      const gp::GpPosterior post(prior, x, y, noise);
      const Vector at_data = post.mean_at(x);
      Eigen::Index best = 0;
      at_data.maxCoeff(&best);
      ctx.set_incumbent(x.row(best).transpose(), at_data[best]);
      Vector scores(grid.rows());
      if (acq == "ucb") {
        Vector mean, var;
        post.predict(grid, mean, var);
        const double gamma = ucb_gamma(static_cast<long>(ctx.trace().records.size()), cfg.ucb_a);
        for (Eigen::Index i = 0; i < grid.rows(); ++i) scores[i] = ucb_score(mean[i], var[i], gamma);
      } else {
        const double new_noise = median(noise);
        if (acq == "kg") {
          const KgProxy proxy(post, x);
          for (Eigen::Index i = 0; i < grid.rows(); ++i) scores[i] = proxy.score(grid.row(i).transpose(), new_noise);
        } else {
          const KgProxy proxy(post, grid);
          for (Eigen::Index i = 0; i < grid.rows(); ++i) {
            Engine zr = ctx.engine(3000 + static_cast<std::uint64_t>(iter));  // common Z across candidates
            scores[i] = proxy.score_saa(grid.row(i).transpose(), new_noise, cfg.saa_samples, zr);
          }
        }
      }
      for (const auto i : top_indices(scores, cfg.batch)) chosen.push_back({grid.row(i).transpose(), scores[i]});
    }

    for (const auto& c : chosen) {
      const int r = static_cast<int>(std::min<long>(cfg.reps_per_point, ctx.budget().remaining()));
      if (r < 1) break;
      data.add(ctx.sample(c.x, r, iter, c.criterion));
    }
  }

  const Matrix x = data.points();
  const Vector y = data.means();
  const Vector noise = data.noise(cfg.noise_shrink, cfg.noise_floor);
  const gp::GpPosterior post(fitter.prior(x, y, noise), x, y, noise);
  const Matrix grid = candidate_grid(cfg, box, x, ctx.engine(1000 + static_cast<std::uint64_t>(iter + 1)));
  const Vector mean = post.mean_at(grid);
  Eigen::Index best = 0;
  double est = mean.maxCoeff(&best);
  Point rec = grid.row(best).transpose();
  if (cfg.refine_final) {
    const double step = box.width().minCoeff() / static_cast<double>(cfg.grid_per_dim * d);
    const auto polished = numopt::pattern_search_max([&](const Vector& p) { return post.mean_at(p); }, rec, box, step,
                                                     1e-9 * box.diagonal());
    if (polished.value > est) {
      rec = polished.x;
      est = polished.value;
    }
  }
  ctx.set_incumbent(rec, est);
  return ctx.finish(rec, est);
}

}  // namespace simopt::opt
