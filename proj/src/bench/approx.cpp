#include "simopt/bench/approx.hpp"

#include "simopt/lowrank/lowrank.hpp"
#include "simopt/opt/run.hpp"

#include <chrono>
#include <ostream>

namespace simopt::bench {

ApproxCompareConfig ApproxCompareConfig::from_kv(const KvDoc& doc) {
  opt::check_config_keys(doc, {"n", "queries", "variants", "m", "kernel", "tau", "eta", "two_nu", "exact_max_n", "seed"},
                         "approx-compare");
  ApproxCompareConfig c;
  c.n = doc.get_int("n", c.n);
  c.queries = doc.get_int("queries", c.queries);
  if (doc.has("variants")) c.variants = doc.get_list("variants");
  if (doc.has("m")) {
    c.m.clear();
    for (double v : doc.get_vector("m")) c.m.push_back(static_cast<Eigen::Index>(v));
  }
  c.kernel = doc.get_string("kernel", c.kernel);
  c.tau = doc.get_double("tau", c.tau);
  c.eta = doc.get_double("eta", c.eta);
  c.two_nu = static_cast<int>(doc.get_int("two_nu", c.two_nu));
  c.exact_max_n = doc.get_int("exact_max_n", c.exact_max_n);
  c.seed = static_cast<std::uint64_t>(doc.get_int("seed", static_cast<long long>(c.seed)));
  if (c.n < 1 || c.queries < 1) throw ConfigError("approx-compare: keys 'n' and 'queries' must be positive");
  for (const auto& v : c.variants) {
    if (v != "nystrom_naive" && v != "nystrom_kernel" && v != "rff") {
      throw ConfigError("approx-compare: key 'variants' names unknown variant '" + v + "'");
    }
  }
  for (auto m : c.m) {
    if (m < 1) throw ConfigError("approx-compare: key 'm' must hold positive ranks");
  }
  if (c.kernel != "gaussian" && c.kernel != "matern") {
    throw ConfigError("approx-compare: key 'kernel' must be gaussian or matern");
  }
  return c;
}

KvDoc ApproxCompareConfig::to_kv() const {
  KvDoc d;
  d.set("n", static_cast<long long>(n));
  d.set("queries", static_cast<long long>(queries));
  std::string v;
  for (const auto& s : variants) v += (v.empty() ? "" : ",") + s;
  d.set("variants", v);
  Vector mv(static_cast<Eigen::Index>(m.size()));
  for (std::size_t i = 0; i < m.size(); ++i) mv[static_cast<Eigen::Index>(i)] = static_cast<double>(m[i]);
  d.set("m", mv);
  d.set("kernel", kernel);
  d.set("tau", tau);
  d.set("eta", eta);
  d.set("two_nu", two_nu);
  d.set("exact_max_n", static_cast<long long>(exact_max_n));
  d.set("seed", static_cast<long long>(seed));
  return d;
}

void ApproxTable::write(std::ostream& out, char sep) const {
  out << "variant" << sep << "n" << sep << "m" << sep << "max_mean_error" << sep << "max_var_error" << sep
      << "build_ms" << sep << "baseline_skipped\n";
  for (const auto& r : rows) {
    out << r.variant << sep << r.n << sep << r.m << sep << (r.max_mean_error ? format_double(*r.max_mean_error) : "")
        << sep << (r.max_var_error ? format_double(*r.max_var_error) : "") << sep << format_double(r.build_ms) << sep
        << (baseline_skipped ? 1 : 0) << '\n';
  }
}

ApproxTable approx_compare(const ApproxCompareConfig& cfg) {
  using clock = std::chrono::steady_clock;
  const auto data = lowrank::synthetic_regression(cfg.n, cfg.queries, cfg.seed);
  gp::KernelPtr kernel;
  if (cfg.kernel == "matern") {
    kernel = std::make_shared<gp::MaternKernel>(cfg.tau, cfg.eta, cfg.two_nu);
  } else {
    kernel = std::make_shared<gp::GaussianKernel>(cfg.tau, cfg.eta);
  }
  const gp::GpPrior prior{gp::MeanFunction::constant(0.0), kernel};
  const auto nq = data.queries.rows();

  ApproxTable table;
  Vector exact_mean;
  Vector exact_var;
  if (cfg.n <= cfg.exact_max_n) {
    const auto t0 = clock::now();
    const gp::GpPosterior exact(prior, data.points, data.y, data.noise);
    const auto t1 = clock::now();
    exact_mean.resize(nq);
    exact_var.resize(nq);
    for (Eigen::Index q = 0; q < nq; ++q) {
      const Point x = data.queries.row(q).transpose();
      exact_mean[q] = exact.mean_at(x);
      exact_var[q] = exact.raw_var_at(x);
    }
    table.rows.push_back({"exact", cfg.n, cfg.n, 0.0, 0.0, std::chrono::duration<double, std::milli>(t1 - t0).count()});
  } else {
    table.baseline_skipped = true;
  }

  for (const auto& variant : cfg.variants) {
    for (const auto m : cfg.m) {
      if (m > cfg.n) continue;
      const auto t0 = clock::now();
      const auto post = lowrank::make_approx(variant, prior, data.points, data.y, data.noise, m,
                                             derive_seed(cfg.seed, static_cast<std::uint64_t>(m)));
      const auto t1 = clock::now();
      ApproxRow row{variant, cfg.n, m, std::nullopt, std::nullopt,
                    std::chrono::duration<double, std::milli>(t1 - t0).count()};
      if (!table.baseline_skipped) {
        double em = 0.0;
        double ev = 0.0;
        for (Eigen::Index q = 0; q < nq; ++q) {
          const Point x = data.queries.row(q).transpose();
          em = std::max(em, std::abs(post->mean_at(x) - exact_mean[q]));
          ev = std::max(ev, std::abs(post->variance_report(x).value - exact_var[q]));
        }
        row.max_mean_error = em;
        row.max_var_error = ev;
      }
      table.rows.push_back(row);
    }
  }
  return table;
}

}  // namespace simopt::bench
