#include "simopt/opt/local.hpp"

#include "simopt/gp/posterior.hpp"
#include "simopt/numopt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace simopt::opt {

SpasConfig SpasConfig::from_kv(const KvDoc& doc) {
  check_config_keys(doc,
                    {"start", "initial_halfwidth", "candidates", "reps", "incumbent_reps", "ball_exponent", "ball_scale",
                     "floor_fraction", "grid_per_dim", "max_surrogate_points"},
                    "spas config");
  SpasConfig c;
  if (doc.has("start")) c.start = doc.get_vector("start");
  c.initial_halfwidth = doc.get_double("initial_halfwidth", c.initial_halfwidth);
  c.candidates = static_cast<int>(doc.get_int("candidates", c.candidates));
  c.reps = static_cast<int>(doc.get_int("reps", c.reps));
  c.incumbent_reps = static_cast<int>(doc.get_int("incumbent_reps", c.incumbent_reps));
  c.ball_exponent = doc.get_double("ball_exponent", c.ball_exponent);
  c.ball_scale = doc.get_double("ball_scale", c.ball_scale);
  c.floor_fraction = doc.get_double("floor_fraction", c.floor_fraction);
  c.grid_per_dim = static_cast<int>(doc.get_int("grid_per_dim", c.grid_per_dim));
  c.max_surrogate_points = static_cast<int>(doc.get_int("max_surrogate_points", c.max_surrogate_points));
  return c;
}

KvDoc SpasConfig::to_kv() const {
  KvDoc d;
  if (start) d.set("start", *start);
  d.set("initial_halfwidth", initial_halfwidth);
  d.set("candidates", candidates);
  d.set("reps", reps);
  d.set("incumbent_reps", incumbent_reps);
  d.set("ball_exponent", ball_exponent);
  d.set("ball_scale", ball_scale);
  d.set("floor_fraction", floor_fraction);
  d.set("grid_per_dim", grid_per_dim);
  d.set("max_surrogate_points", max_surrogate_points);
  return d;
}

double shrinking_ball_estimate(const std::vector<Point>& points, const std::vector<double>& outputs, const Point& x,
                               double radius) {
  if (points.size() != outputs.size()) throw DomainError("shrinking ball: size mismatch");
  double sum = 0.0;
  long count = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if ((points[i] - x).norm() <= radius) {
      sum += outputs[i];
      ++count;
    }
  }
  if (count == 0) throw DomainError("shrinking ball: no samples within the radius");
  return sum / static_cast<double>(count);
}

namespace {

struct History {
  std::vector<Point> sample_points;  // one entry per replication
  std::vector<double> outputs;
  std::vector<Point> visited;  // distinct solutions

  void add(const sim::ReplicationSet& s) {
    for (double y : s.outputs) {
      sample_points.push_back(s.point);
      outputs.push_back(y);
    }
    if (std::none_of(visited.begin(), visited.end(), [&](const Point& v) { return v == s.point; })) {
      visited.push_back(s.point);
    }
  }
  [[nodiscard]] double estimate(const Point& x, double radius) const {
    return shrinking_ball_estimate(sample_points, outputs, x, radius);
  }
};

Box mpa_box(const Box& box, const Point& center, const Vector& half) {
  return Box{(center - half).cwiseMax(box.lower), (center + half).cwiseMin(box.upper)};
}

}  // namespace

OptimizationTrace spas_run(const sim::SimulationModel& model, const SpasConfig& cfg, long budget,
                           std::uint64_t seed) {
  RunContext ctx(model, budget, seed, "spas");
  const auto& box = ctx.box();
  const auto d = ctx.dim();
  if (cfg.candidates < 1 || cfg.reps < 1 || cfg.incumbent_reps < 1) throw ConfigError("spas: counts must be positive");
  if (!(cfg.initial_halfwidth > 0.0)) throw ConfigError("spas: initial_halfwidth must be positive");
  if (!(cfg.ball_scale > 0.0)) throw ConfigError("spas: ball_scale must be positive");
  const long per_iter = static_cast<long>(cfg.candidates) * cfg.reps + cfg.incumbent_reps;
  if (per_iter > budget) throw DomainError("spas: budget below one iteration");

  const Vector floor = cfg.floor_fraction * box.width();
  Vector half = cfg.initial_halfwidth * box.width();
  Point incumbent = box.project(cfg.start.value_or(box.center()));
  std::optional<Point> previous;
  History hist;
  long k = 0;
  double incumbent_est = NAN;

  while (ctx.budget().remaining() >= per_iter) {
    ++k;
    // Step 1: the promising area and fresh candidates inside it
    const Box mpa = mpa_box(box, incumbent, half);
    Engine rng = ctx.engine(static_cast<std::uint64_t>(k));
    const Matrix cands = numopt::uniform_points(cfg.candidates, mpa, rng);
    hist.add(ctx.sample(incumbent, cfg.incumbent_reps, k));
    for (Eigen::Index i = 0; i < cands.rows(); ++i) hist.add(ctx.sample(cands.row(i).transpose(), cfg.reps, k));

    // Step 2: shrinking-ball estimates
    const double radius = cfg.ball_scale * half.minCoeff() * std::pow(static_cast<double>(k), -cfg.ball_exponent);
    incumbent_est = hist.estimate(incumbent, radius);
    if (previous) {
      const double prev_est = hist.estimate(*previous, radius);
      if (incumbent_est <= prev_est) {
        incumbent = *previous;
        incumbent_est = prev_est;
        half *= 0.5;
      }
      previous.reset();
    }
    ctx.set_incumbent(incumbent, incumbent_est);
    if ((half.array() < floor.array()).any()) {
      ctx.trace().converged = true;
      break;
    }

    // Step 3: interpolating GP on the estimates of visited solutions near the area
    const Box area = mpa_box(box, incumbent, half);
    std::vector<std::size_t> near;
    for (std::size_t i = 0; i < hist.visited.size(); ++i) {
      const Vector gap = (hist.visited[i] - incumbent).cwiseAbs();
      if ((gap.array() <= 2.0 * half.array()).all()) near.push_back(i);
    }
    std::stable_sort(near.begin(), near.end(), [&](std::size_t a, std::size_t b) {
      return (hist.visited[a] - incumbent).norm() < (hist.visited[b] - incumbent).norm();
    });
    if (near.size() > static_cast<std::size_t>(cfg.max_surrogate_points)) {
      near.resize(static_cast<std::size_t>(cfg.max_surrogate_points));
    }
    Matrix xs(static_cast<Eigen::Index>(near.size()), d);
    Vector ys(xs.rows());
    for (Eigen::Index i = 0; i < xs.rows(); ++i) {
      const auto& v = hist.visited[near[static_cast<std::size_t>(i)]];
      xs.row(i) = v.transpose();
      ys[i] = hist.estimate(v, radius);
    }
    double spread = std::sqrt((ys.array() - ys.mean()).square().mean());
    if (!(spread > 0.0)) spread = 1.0;
    const gp::GpPrior prior{gp::MeanFunction::constant(ys.mean()),
                            std::make_shared<gp::MaternKernel>(spread, 0.5 * half.mean(), 5)};
    const gp::GpPosterior post(prior, xs, ys, Vector::Zero(xs.rows()));

    // Step 4: surrogate argmax within the area
    Engine grng = ctx.engine(1000000 + static_cast<std::uint64_t>(k));
    const Matrix lhs = numopt::latin_hypercube(cfg.grid_per_dim * d, area, grng);
    Matrix grid(lhs.rows() + 1, d);
    grid << incumbent.transpose(), lhs;
    const Vector mu = post.mean_at(grid);
    Eigen::Index best = 0;
    mu.maxCoeff(&best);
    auto polished = numopt::pattern_search_max([&](const Vector& p) { return post.mean_at(p); },
                                               grid.row(best).transpose(), area, 0.25 * half.minCoeff(),
                                               1e-3 * half.minCoeff(), 200);
    const Point next = polished.value > mu[best] ? Point(polished.x) : Point(grid.row(best).transpose());
    if (best == 0 && polished.value <= mu[0]) {
      half *= 0.5;  // the surrogate sees nothing better than the incumbent
    } else {
      previous = incumbent;
      incumbent = next;
      incumbent_est = std::max(polished.value, mu[best]);
    }
  }
  if (!ctx.trace().converged) ctx.trace().truncated = ctx.budget().remaining() > 0;
  return ctx.finish(incumbent, incumbent_est);
}

}  // namespace simopt::opt
