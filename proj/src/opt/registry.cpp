#include "simopt/opt/registry.hpp"

#include "simopt/opt/global.hpp"
#include "simopt/opt/local.hpp"

namespace simopt::opt {

const std::vector<std::string>& algorithm_ids() {
  static const std::vector<std::string> ids{"rsm", "strong", "spas", "kg", "kg_saa", "ucb", "gps"};
  return ids;
}

void check_algorithm_config(const std::string& id, const KvDoc& config) {
  if (id == "rsm") (void)RsmConfig::from_kv(config);
  else if (id == "strong") (void)StrongConfig::from_kv(config);
  else if (id == "spas") (void)SpasConfig::from_kv(config);
  else if (id == "kg" || id == "kg_saa" || id == "ucb" || id == "gps") (void)GlobalConfig::from_kv(config);
  else throw ConfigError("unknown algorithm id '" + id + "'");
}

OptimizationTrace run_algorithm(const std::string& id, const sim::SimulationModel& model, const KvDoc& config,
                                long budget, std::uint64_t seed) {
  if (id == "rsm") return rsm_run(model, RsmConfig::from_kv(config), budget, seed);
  if (id == "strong") return strong_run(model, StrongConfig::from_kv(config), budget, seed);
  if (id == "spas") return spas_run(model, SpasConfig::from_kv(config), budget, seed);
  if (id == "kg" || id == "kg_saa" || id == "ucb" || id == "gps") {
    KvDoc doc = config;
    if (doc.has("acquisition") && doc.at("acquisition") != id) {
      throw ConfigError("algorithm " + id + ": conflicting key 'acquisition'");
    }
    doc.set("acquisition", id);
    return sequential_template(model, GlobalConfig::from_kv(doc), budget, seed);
  }
  throw ConfigError("unknown algorithm id '" + id + "'");
}

}  // namespace simopt::opt
