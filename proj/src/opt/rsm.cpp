#include "simopt/opt/local.hpp"

#include "simopt/stats.hpp"

#include <cmath>

namespace simopt::opt {

RsmConfig RsmConfig::from_kv(const KvDoc& doc) {
  check_config_keys(doc,
                    {"start", "step", "halfwidth", "center_points", "reps", "alpha", "lof_relative", "max_stage1",
                     "max_line_steps"},
                    "rsm config");
  RsmConfig c;
  if (doc.has("start")) c.start = doc.get_vector("start");
  if (doc.has("step")) c.step = doc.get_double("step");
  if (doc.has("halfwidth")) c.halfwidth = doc.get_double("halfwidth");
  c.center_points = static_cast<int>(doc.get_int("center_points", c.center_points));
  c.reps = static_cast<int>(doc.get_int("reps", c.reps));
  c.alpha = doc.get_double("alpha", c.alpha);
  c.lof_relative = doc.get_double("lof_relative", c.lof_relative);
  c.max_stage1 = static_cast<int>(doc.get_int("max_stage1", c.max_stage1));
  c.max_line_steps = static_cast<int>(doc.get_int("max_line_steps", c.max_line_steps));
  return c;
}

KvDoc RsmConfig::to_kv() const {
  KvDoc d;
  if (start) d.set("start", *start);
  if (step) d.set("step", *step);
  if (halfwidth) d.set("halfwidth", *halfwidth);
  d.set("center_points", center_points);
  d.set("reps", reps);
  d.set("alpha", alpha);
  d.set("lof_relative", lof_relative);
  d.set("max_stage1", max_stage1);
  d.set("max_line_steps", max_line_steps);
  return d;
}

LackOfFit first_order_lack_of_fit(const Matrix& offsets, const std::vector<std::vector<double>>& outputs,
                                  const LocalModel& model, double halfwidth, double alpha, double lof_relative) {
  LackOfFit out;
  long total = 0;
  double weight = 0.0;
  for (Eigen::Index i = 0; i < offsets.rows(); ++i) {
    const auto& o = outputs[static_cast<std::size_t>(i)];
    const auto mv = stats::mean_var(o);
    const double fitted = model.value(offsets.row(i).transpose());
    out.ss_lof += static_cast<double>(o.size()) * (mv.mean - fitted) * (mv.mean - fitted);
    out.ss_pe += mv.variance * static_cast<double>(o.size() - 1);
    total += static_cast<long>(o.size());
    weight += static_cast<double>(o.size());
  }
  const long params = offsets.cols() + 1;
  out.df_lof = offsets.rows() - params;
  out.df_pe = total - offsets.rows();
  if (out.df_lof < 1) throw DomainError("lack of fit: design has no degrees of freedom for lack of fit");
  const double gnorm = model.g.norm();
  const bool noisy = out.df_pe >= 1 && out.ss_pe > 1e-300;
  if (noisy) {
    out.statistic = (out.ss_lof / static_cast<double>(out.df_lof)) / (out.ss_pe / static_cast<double>(out.df_pe));
    out.inadequate = out.statistic > stats::fisher_f_upper(alpha, static_cast<double>(out.df_lof),
                                                           static_cast<double>(out.df_pe));
  } else {
    const double rms = std::sqrt(out.ss_lof / weight);
    const double scale = halfwidth * gnorm;
    out.statistic = scale > 0.0 ? rms / scale : (rms > 0.0 ? INFINITY : 0.0);
    out.inadequate = out.statistic > lof_relative;
  }
  return out;
}

namespace {

struct DesignResult {
  Matrix offsets;
  std::vector<std::vector<double>> outputs;
  Vector means;
};

/// Simulates center + coded * scale (projected into the box); the center gets `center_reps`.
DesignResult run_design(RunContext& ctx, const Point& center, const Matrix& coded, double scale, int reps,
                        int center_reps, long iter) {
  const auto& box = ctx.box();
  DesignResult r;
  const auto rows = coded.rows() + (center_reps > 0 ? 1 : 0);
  r.offsets.resize(rows, center.size());
  r.means.resize(rows);
  for (Eigen::Index i = 0; i < coded.rows(); ++i) {
    const Point x = box.project(center + scale * coded.row(i).transpose());
    auto s = ctx.sample(x, reps, iter);
    r.offsets.row(i) = (x - center).transpose();
    r.outputs.push_back(s.outputs);
  }
  if (center_reps > 0) {
    auto s = ctx.sample(center, center_reps, iter);
    r.offsets.row(rows - 1).setZero();
    r.outputs.push_back(s.outputs);
  }
  for (Eigen::Index i = 0; i < rows; ++i) r.means[i] = stats::mean_var(r.outputs[static_cast<std::size_t>(i)]).mean;
  return r;
}

double sample_mean(RunContext& ctx, const Point& x, int reps, long iter) {
  const auto s = ctx.sample(x, reps, iter);
  return stats::mean_var(s.outputs).mean;
}

}  // namespace

OptimizationTrace rsm_run(const sim::SimulationModel& model, const RsmConfig& cfg, long budget, std::uint64_t seed) {
  RunContext ctx(model, budget, seed, "rsm");
  const auto& box = ctx.box();
  const auto d = ctx.dim();
  if (cfg.reps < 1 || cfg.center_points < 2) throw ConfigError("rsm: reps must be >= 1 and center_points >= 2");
  const double h = cfg.halfwidth.value_or(0.05 * box.width().minCoeff());
  double step = cfg.step.value_or(0.05 * box.diagonal());
  if (!(h > 0.0) || !(step > 0.0)) throw ConfigError("rsm: halfwidth and step must be positive");
  Point center = box.project(cfg.start.value_or(box.center()));
  if (!box.contains(center)) throw FeasibilityError("rsm: start outside the box");

  const Matrix factorial = two_level_design(d, d > 6);
  const long stage1_cost = factorial.rows() * cfg.reps + cfg.center_points;
  if (stage1_cost > budget) throw DomainError("rsm: budget is smaller than one stage-1 design");

  double center_est = NAN;
  long iter = 0;
  try {
    // stage 1: steepest ascent while the first-order model is adequate
    for (int stage = 0; stage < cfg.max_stage1; ++stage) {
      ++iter;
      const auto design = run_design(ctx, center, factorial, h, cfg.reps, cfg.center_points, iter);
      center_est = design.means[design.means.size() - 1];
      ctx.set_incumbent(center, center_est);
      const auto fit = fit_local_model(design.offsets, design.means, 1);
      const auto lof = first_order_lack_of_fit(design.offsets, design.outputs, fit, h, cfg.alpha, cfg.lof_relative);
      const double gnorm = fit.g.norm();
      if (lof.inadequate || gnorm == 0.0) break;
      const Vector dir = fit.g / gnorm;
      Point best = center;
      double best_val = center_est;
      for (int j = 1; j <= cfg.max_line_steps; ++j) {
        const Point x = box.project(center + static_cast<double>(j) * step * dir);
        if ((x - best).norm() == 0.0) break;  // stuck on the boundary
        const double v = sample_mean(ctx, x, cfg.reps, iter);
        if (v <= best_val) break;
        best = x;
        best_val = v;
      }
      if ((best - center).norm() == 0.0) {
        step *= 0.5;
        if (step < 1e-6 * box.diagonal()) break;
        continue;
      }
      center = best;
      center_est = best_val;
      ctx.set_incumbent(center, center_est);
    }

    // stage 2: central composite design and the stationary point of the quadratic
    ++iter;
    const Matrix ccd = central_composite(d, std::sqrt(static_cast<double>(d)), 0);
    const auto design = run_design(ctx, center, ccd, h, cfg.reps, cfg.center_points, iter);
    const auto fit = fit_local_model(design.offsets, design.means, 2);
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(fit.h);
    Vector s;
    if (eig.eigenvalues().maxCoeff() < 0.0) {
      s = -fit.h.ldlt().solve(fit.g);
    } else {
      s = trust_region_step(fit.g, fit.h, 2.0 * h * std::sqrt(static_cast<double>(d)));
    }
    const Point rec = box.project(center + s);
    ctx.set_incumbent(rec, fit.value(rec - center));
    ctx.trace().converged = true;  // both stages done
    return ctx.finish(rec, fit.value(rec - center));
  } catch (const BudgetExhausted&) {
    ctx.trace().truncated = true;
    return ctx.finish(center, center_est);
  }
}

}  // namespace simopt::opt
