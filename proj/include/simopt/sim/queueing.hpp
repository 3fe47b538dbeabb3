#pragma once

#include "simopt/rng.hpp"

#include <limits>
#include <vector>

namespace simopt::sim {

/// Mean sojourn time (waiting + service) of a stable M/M/c queue, via Erlang C.
[[nodiscard]] double stylized_queue_mean_los(double arrival_rate, double service_rate, int servers);

/// One station of a serial line.
struct Station {
  int servers = 1;
  double service_rate = 1.0;
  /// Waiting room in front of the station; the first station is always unbounded.
  int buffer = std::numeric_limits<int>::max();
};

struct TandemConfig {
  double arrival_rate = 1.0;
  std::vector<Station> stations;
  long customers = 2000;  ///< customers whose sojourn is averaged
  long warmup = 200;      ///< customers discarded before averaging
};

/// Discrete-event simulation of a Poisson-fed serial line of multi-server
/// stations with blocking after service. Returns the average sojourn time of
/// customers warmup+1 .. warmup+customers.
[[nodiscard]] double simulate_tandem(const TandemConfig& config, Engine& rng);

}  // namespace simopt::sim
