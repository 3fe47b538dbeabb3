#include "simopt/sim/queueing.hpp"

#include "simopt/common.hpp"

#include <cmath>
#include <deque>
#include <queue>
#include <string>

namespace simopt::sim {

double stylized_queue_mean_los(double arrival_rate, double service_rate, int servers) {
  if (servers < 1) throw DomainError("stylized queue: servers must be >= 1");
  if (!(service_rate > 0.0) || !(arrival_rate >= 0.0)) {
    throw DomainError("stylized queue: rates must be positive");
  }
  const double capacity = servers * service_rate;
  if (!(arrival_rate < capacity)) {
    throw DomainError("stylized queue: unstable (arrival rate " + std::to_string(arrival_rate) +
                      " >= capacity " + std::to_string(capacity) + ")");
  }
  const double load = arrival_rate / service_rate;
  const double rho = arrival_rate / capacity;
  // Erlang B by recursion, then Erlang C.
  double erlang_b = 1.0;
  for (int k = 1; k <= servers; ++k) erlang_b = load * erlang_b / (k + load * erlang_b);
  const double erlang_c = erlang_b / (1.0 - rho * (1.0 - erlang_b));
  const double wait = erlang_c / (capacity - arrival_rate);
  return wait + 1.0 / service_rate;
}

namespace {

enum class ServerStatus { idle, busy, blocked };

struct Server {
  ServerStatus status = ServerStatus::idle;
  long customer = -1;
};

struct StationState {
  std::vector<Server> servers;
  std::deque<long> queue;
  std::deque<int> blocked;  // servers holding a finished customer, in blocking order
};

struct Event {
  double time;
  long seq;
  int station;  // -1 for an arrival
  int server;
  bool operator>(const Event& o) const { return time != o.time ? time > o.time : seq > o.seq; }
};

class TandemSimulation {
 public:
  TandemSimulation(const TandemConfig& cfg, Engine& rng) : cfg_(cfg), rng_(rng) {
    if (cfg.stations.empty()) throw DomainError("tandem: at least one station required");
    if (!(cfg.arrival_rate > 0.0)) throw DomainError("tandem: arrival rate must be positive");
    for (const auto& s : cfg.stations) {
      if (s.servers < 1 || !(s.service_rate > 0.0) || s.buffer < 0) throw DomainError("tandem: bad station");
      StationState st;
      st.servers.resize(static_cast<std::size_t>(s.servers));
      state_.push_back(std::move(st));
    }
    tracked_end_ = cfg.warmup + cfg.customers;
  }

  double run() {
    schedule(exp_draw(cfg_.arrival_rate), -1, -1);
    while (completed_ < cfg_.customers) {
      const Event e = events_.top();
      events_.pop();
      now_ = e.time;
      if (e.station < 0) {
        on_arrival();
      } else {
        on_service_done(e.station, e.server);
      }
    }
    return total_sojourn_ / static_cast<double>(cfg_.customers);
  }

 private:
  double exp_draw(double rate) { return std::exponential_distribution<double>(rate)(rng_); }

  void schedule(double t, int station, int server) { events_.push(Event{t, seq_++, station, server}); }

  bool has_space(int j) const {
    const auto& st = state_[static_cast<std::size_t>(j)];
    for (const auto& s : st.servers) {
      if (s.status == ServerStatus::idle) return true;
    }
    if (j == 0) return true;
    return static_cast<long>(st.queue.size()) < cfg_.stations[static_cast<std::size_t>(j)].buffer;
  }

  void start_service(int j, int s, long c) {
    auto& srv = state_[static_cast<std::size_t>(j)].servers[static_cast<std::size_t>(s)];
    srv.status = ServerStatus::busy;
    srv.customer = c;
    schedule(now_ + exp_draw(cfg_.stations[static_cast<std::size_t>(j)].service_rate), j, s);
  }

  void admit(int j, long c) {
    auto& st = state_[static_cast<std::size_t>(j)];
    for (std::size_t s = 0; s < st.servers.size(); ++s) {
      if (st.servers[s].status == ServerStatus::idle) {
        start_service(j, static_cast<int>(s), c);
        return;
      }
    }
    st.queue.push_back(c);
  }

  void release(int j, int s) {
    auto& st = state_[static_cast<std::size_t>(j)];
    st.servers[static_cast<std::size_t>(s)] = Server{};
    if (!st.queue.empty()) {
      const long next = st.queue.front();
      st.queue.pop_front();
      start_service(j, s, next);
    }
    if (j > 0) {
      auto& up = state_[static_cast<std::size_t>(j - 1)];
      if (!up.blocked.empty() && has_space(j)) {
        const int us = up.blocked.front();
        up.blocked.pop_front();
        const long c = up.servers[static_cast<std::size_t>(us)].customer;
        admit(j, c);
        release(j - 1, us);
      }
    }
  }

  void on_arrival() {
    const long c = static_cast<long>(arrival_time_.size());
    arrival_time_.push_back(now_);
    schedule(now_ + exp_draw(cfg_.arrival_rate), -1, -1);
    admit(0, c);
  }

  void on_service_done(int j, int s) {
    auto& srv = state_[static_cast<std::size_t>(j)].servers[static_cast<std::size_t>(s)];
    const long c = srv.customer;
    const int last = static_cast<int>(state_.size()) - 1;
    if (j == last) {
      if (c >= cfg_.warmup && c < tracked_end_) {
        total_sojourn_ += now_ - arrival_time_[static_cast<std::size_t>(c)];
        ++completed_;
      }
      release(j, s);
    } else if (has_space(j + 1)) {
      admit(j + 1, c);
      release(j, s);
    } else {
      srv.status = ServerStatus::blocked;
      state_[static_cast<std::size_t>(j)].blocked.push_back(s);
    }
  }

  const TandemConfig& cfg_;
  Engine& rng_;
  std::vector<StationState> state_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::vector<double> arrival_time_;
  double now_ = 0.0;
  long seq_ = 0;
  long tracked_end_ = 0;
  long completed_ = 0;
  double total_sojourn_ = 0.0;
};

}  // namespace

double simulate_tandem(const TandemConfig& config, Engine& rng) {
  if (config.customers < 1 || config.warmup < 0) throw DomainError("tandem: bad run length");
  TandemSimulation sim(config, rng);
  return sim.run();
}

}  // namespace simopt::sim
