#pragma once

#include "simopt/common.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace simopt::bench {

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;      ///< worst error (or worst |z| for Monte Carlo checks)
  double tolerance = 0.0;
  double seconds = 0.0;
};

/// `perturb` names a check whose computed side is scaled by (1 + 1e-3), or by 1.05 for the
/// Monte Carlo check; it exists so tests can confirm each check is able to fail.
struct CheckOptions {
  int instances = 20;
  std::uint64_t seed = 7;
  std::string perturb;
};

/// krr_predict with K = phi^T phi against the RLS predictor; relative to the largest prediction.
[[nodiscard]] CheckResult check_rls_krr(const CheckOptions& opt = {});
/// kg_update against a refit on the augmented data, means and covariances at 20 queries.
[[nodiscard]] CheckResult check_kg_update(const CheckOptions& opt = {});
/// woodbury_solve against a dense solve, relative residual.
[[nodiscard]] CheckResult check_woodbury(const CheckOptions& opt = {});
/// Nystrom induced-kernel posterior against a dense oracle with the induced kernel.
[[nodiscard]] CheckResult check_nystrom_induced(const CheckOptions& opt = {});
/// Smoother identity k~(x)^T (K~ + Sigma)^{-1} = k_m(x)^T Q^{-1} K_mn Sigma^{-1}.
[[nodiscard]] CheckResult check_nystrom_smoother(const CheckOptions& opt = {});
/// Both Nystrom variants with m = n reproduce the exact posterior.
[[nodiscard]] CheckResult check_nystrom_full_rank(const CheckOptions& opt = {});
/// Matched-sample Monte Carlo of cos(w^T(x - x')) - 2 cos(w^T x + b) cos(w^T x' + b); value is max |z| over pairs.
[[nodiscard]] CheckResult check_cosine_identity(const CheckOptions& opt = {}, long samples = 100000, int pairs = 10);

[[nodiscard]] std::vector<CheckResult> run_selfcheck(const CheckOptions& opt = {});
/// name,pass,value,tolerance,seconds
void write_checks(std::ostream& out, const std::vector<CheckResult>& checks, char sep = ',');

}  // namespace simopt::bench
