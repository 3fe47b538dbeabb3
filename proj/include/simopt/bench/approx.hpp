#pragma once

#include "simopt/kv.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace simopt::bench {

/// Low-rank posteriors against the exact one on synthetic 2-D regression data.
struct ApproxCompareConfig {
  Eigen::Index n = 400;
  Eigen::Index queries = 200;
  std::vector<std::string> variants{"nystrom_naive", "nystrom_kernel", "rff"};
  std::vector<Eigen::Index> m{10, 25, 50, 100, 200, 400};
  std::string kernel = "gaussian";
  double tau = 1.0;
  double eta = 1.5;
  int two_nu = 5;
  Eigen::Index exact_max_n = 4000;  ///< above this the exact baseline is skipped
  std::uint64_t seed = 1;

  [[nodiscard]] static ApproxCompareConfig from_kv(const KvDoc& doc);
  [[nodiscard]] KvDoc to_kv() const;
};

struct ApproxRow {
  std::string variant;
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  std::optional<double> max_mean_error;
  std::optional<double> max_var_error;
  double build_ms = 0.0;
};

struct ApproxTable {
  std::vector<ApproxRow> rows;  ///< the exact row first (when computed), then variant-major in m order
  bool baseline_skipped = false;

  /// variant,n,m,max_mean_error,max_var_error,build_ms,baseline_skipped
  void write(std::ostream& out, char sep = ',') const;
};

/// m larger than n is skipped. Variance errors use the unclamped variance of each variant.
[[nodiscard]] ApproxTable approx_compare(const ApproxCompareConfig& cfg);

}  // namespace simopt::bench
