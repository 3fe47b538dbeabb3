#include "simopt/opt/local.hpp"

#include "simopt/stats.hpp"

#include <algorithm>
#include <cmath>

namespace simopt::opt {

void TrustRegionState::validate() const {
  if (!(gamma1 > 0.0 && gamma1 < 1.0)) throw DomainError("trust region: need 0 < gamma1 < 1");
  if (!(gamma2 > 1.0)) throw DomainError("trust region: need gamma2 > 1");
  if (!(eta0 > 0.0 && eta0 < eta1 && eta1 < 1.0)) throw DomainError("trust region: need 0 < eta0 < eta1 < 1");
  if (!(radius > 0.0)) throw DomainError("trust region: radius must be positive");
  if (!(threshold > 0.0)) throw DomainError("trust region: threshold must be positive");
}

StrongDecision strong_transition(const TrustRegionState& s, bool passed, double rho) {
  if (!passed) return {false, s.gamma1 * s.radius, StrongBranch::shrink_test};
  if (rho >= s.eta1) return {true, s.gamma2 * s.radius, StrongBranch::expand};
  if (rho >= s.eta0) return {true, s.radius, StrongBranch::keep};
  return {false, s.gamma1 * s.radius, StrongBranch::shrink_ratio};
}

int StrongConfig::reps(long k) const {
  return static_cast<int>(std::ceil(base_reps * std::pow(static_cast<double>(std::max(k, 1L)), rep_growth) - 1e-9));
}

TrustRegionState StrongConfig::initial_state(const Box& box) const {
  TrustRegionState s;
  s.center = box.project(start.value_or(box.center()));
  s.threshold = threshold.value_or(0.2 * box.diagonal() / std::sqrt(static_cast<double>(box.dim())));
  s.radius = initial_radius.value_or(0.75 * s.threshold);
  s.gamma1 = gamma1;
  s.gamma2 = gamma2;
  s.eta0 = eta0;
  s.eta1 = eta1;
  s.validate();
  return s;
}

StrongConfig StrongConfig::from_kv(const KvDoc& doc) {
  check_config_keys(doc,
                    {"gamma1", "gamma2", "eta0", "eta1", "alpha", "threshold", "initial_radius", "start", "base_reps",
                     "rep_growth", "min_radius_fraction"},
                    "strong config");
  StrongConfig c;
  c.gamma1 = doc.get_double("gamma1", c.gamma1);
  c.gamma2 = doc.get_double("gamma2", c.gamma2);
  c.eta0 = doc.get_double("eta0", c.eta0);
  c.eta1 = doc.get_double("eta1", c.eta1);
  c.alpha = doc.get_double("alpha", c.alpha);
  if (doc.has("threshold")) c.threshold = doc.get_double("threshold");
  if (doc.has("initial_radius")) c.initial_radius = doc.get_double("initial_radius");
  if (doc.has("start")) c.start = doc.get_vector("start");
  c.base_reps = static_cast<int>(doc.get_int("base_reps", c.base_reps));
  c.rep_growth = doc.get_double("rep_growth", c.rep_growth);
  c.min_radius_fraction = doc.get_double("min_radius_fraction", c.min_radius_fraction);
  return c;
}

KvDoc StrongConfig::to_kv() const {
  KvDoc d;
  d.set("gamma1", gamma1);
  d.set("gamma2", gamma2);
  d.set("eta0", eta0);
  d.set("eta1", eta1);
  d.set("alpha", alpha);
  if (threshold) d.set("threshold", *threshold);
  if (initial_radius) d.set("initial_radius", *initial_radius);
  if (start) d.set("start", *start);
  d.set("base_reps", base_reps);
  d.set("rep_growth", rep_growth);
  d.set("min_radius_fraction", min_radius_fraction);
  return d;
}

namespace {

Matrix coded_design(const TrustRegionState& s, Eigen::Index d, int& order) {
  order = s.radius >= s.threshold ? 1 : 2;
  return order == 1 ? two_level_design(d, true) : central_composite(d, std::sqrt(static_cast<double>(d)), 0);
}

}  // namespace

long strong_step_cost(const TrustRegionState& state, const StrongConfig& config, Eigen::Index d) {
  int order = 1;
  const Matrix coded = coded_design(state, d, order);
  return static_cast<long>(coded.rows() + 2) * config.reps(state.k + 1);
}

StrongStep strong_step(RunContext& ctx, TrustRegionState& state, const StrongConfig& cfg) {
  state.validate();
  const auto& box = ctx.box();
  const auto d = ctx.dim();
  const long k = state.k + 1;
  const int r = cfg.reps(k);
  StrongStep out;
  const Matrix coded = coded_design(state, d, out.order);
  const double scale = state.radius / std::sqrt(static_cast<double>(d));

  // Step 1: local design around the center; the center replications accumulate.
  Matrix offsets(coded.rows() + 1, d);
  Vector means(coded.rows() + 1);
  for (Eigen::Index i = 0; i < coded.rows(); ++i) {
    const Point x = box.project(state.center + scale * coded.row(i).transpose());
    const auto s = ctx.sample(x, r, k);
    offsets.row(i) = (x - state.center).transpose();
    means[i] = stats::mean_var(s.outputs).mean;
  }
  const auto cs = ctx.sample(state.center, r, k);
  state.center_outputs.insert(state.center_outputs.end(), cs.outputs.begin(), cs.outputs.end());
  const auto center_mv = stats::mean_var(state.center_outputs);
  offsets.row(coded.rows()).setZero();
  means[coded.rows()] = stats::mean_var(cs.outputs).mean;
  ctx.set_incumbent(state.center, center_mv.mean);

  auto finish = [&](const StrongDecision& dec) {
    out.decision = dec;
    if (dec.move) {
      state.center = out.candidate;
      state.center_outputs.clear();
    }
    const double lo = cfg.min_radius_fraction * box.diagonal();
    state.radius = std::clamp(dec.radius, lo, box.diagonal());
    state.k = k;
    return out;
  };

  // Step 2: maximize the local model over the ball, staying in the box.
  LocalModel model;
  try {
    model = fit_local_model(offsets, means, out.order);
  } catch (const RankDeficiencyError&) {
    out.candidate = state.center;
    return finish({false, state.gamma1 * state.radius, StrongBranch::shrink_degenerate});
  }
  Vector step;
  if (out.order == 1) {
    const double gnorm = model.g.norm();
    step = gnorm > 0.0 ? Vector(state.radius * model.g / gnorm) : Vector(Vector::Zero(d));
  } else {
    step = trust_region_step(model.g, model.h, state.radius);
  }
  out.candidate = box.project(state.center + step);
  out.predicted = model.improvement(out.candidate - state.center);
  if (!(out.predicted > 0.0)) return finish({false, state.gamma1 * state.radius, StrongBranch::shrink_degenerate});

  // Steps 3-4: simulate the candidate, then the sufficient-reduction and ratio tests.
  const auto cand = ctx.sample(out.candidate, r, k, out.predicted);
  const auto cand_mv = stats::mean_var(cand.outputs);
  out.passed = stats::welch_greater(cand_mv, center_mv, cfg.alpha);
  out.observed = cand_mv.mean - center_mv.mean;
  out.rho = out.observed / out.predicted;
  const auto dec = strong_transition(state, out.passed, out.rho);
  finish(dec);
  if (dec.move) {
    state.center_outputs = cand.outputs;
    ctx.set_incumbent(state.center, cand_mv.mean);
  }
  return out;
}

OptimizationTrace strong_run(const sim::SimulationModel& model, const StrongConfig& cfg, long budget,
                             std::uint64_t seed) {
  RunContext ctx(model, budget, seed, "strong");
  auto state = cfg.initial_state(ctx.box());
  if (strong_step_cost(state, cfg, ctx.dim()) > budget) throw DomainError("strong: budget below one iteration");
  while (strong_step_cost(state, cfg, ctx.dim()) <= ctx.budget().remaining()) strong_step(ctx, state, cfg);
  const double est = state.center_outputs.empty() ? NAN : stats::mean_var(state.center_outputs).mean;
  ctx.set_incumbent(state.center, est);
  ctx.trace().truncated = ctx.budget().remaining() > 0;
  return ctx.finish(state.center, est);
}

}  // namespace simopt::opt
