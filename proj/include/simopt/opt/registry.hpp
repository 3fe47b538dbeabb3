#pragma once

#include "simopt/opt/run.hpp"

#include <string>
#include <vector>

namespace simopt::opt {

/// rsm, strong, spas, kg, kg_saa, ucb, gps
[[nodiscard]] const std::vector<std::string>& algorithm_ids();

/// Parses `config` for algorithm `id` without running it; throws ConfigError naming a bad key.
void check_algorithm_config(const std::string& id, const KvDoc& config);

/// Runs algorithm `id` with its defaults overridden by `config`; unknown ids or keys throw ConfigError.
[[nodiscard]] OptimizationTrace run_algorithm(const std::string& id, const sim::SimulationModel& model,
                                              const KvDoc& config, long budget, std::uint64_t seed);

}  // namespace simopt::opt
