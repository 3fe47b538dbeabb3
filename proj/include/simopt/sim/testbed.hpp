#pragma once

#include "simopt/kv.hpp"
#include "simopt/sim/model.hpp"
#include "simopt/sim/queueing.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace simopt::sim {

/// f(x) + sigma * N(0,1), with f given in closed form.
class FunctionModel : public SimulationModel {
 public:
  using Mean = std::function<double(const Point&)>;
  using Gradient = std::function<Vector(const Point&)>;

  FunctionModel(std::string id, Box box, Mean mean, double noise_sd);

  /// Enables direct gradient estimates g = grad f + zeta where (eps, zeta) has
  /// equicorrelated components with variance noise_sd^2 and correlation `rho`.
  FunctionModel& with_gradient(Gradient grad, double rho = 0.5);
  FunctionModel& with_argmax(Point argmax);
  FunctionModel& with_stylized(Mean psi);

  [[nodiscard]] std::string id() const override { return id_; }
  [[nodiscard]] const Box& box() const override { return box_; }
  [[nodiscard]] double evaluate(const Point& x, Engine& rng) const override;
  [[nodiscard]] bool has_gradient() const override { return static_cast<bool>(grad_); }
  [[nodiscard]] GradientSample evaluate_with_gradient(const Point& x, Engine& rng) const override;
  [[nodiscard]] std::optional<double> stylized(const Point& x) const override;
  [[nodiscard]] std::optional<double> true_mean(const Point& x) const override { return mean_(x); }
  [[nodiscard]] std::optional<Point> known_argmax() const override { return argmax_; }
  [[nodiscard]] std::optional<double> known_max() const override;

  [[nodiscard]] double noise_sd() const { return noise_sd_; }
  /// Covariance of (eps, zeta_1..zeta_d) for one replication.
  [[nodiscard]] Matrix value_gradient_noise_cov() const;

 private:
  std::string id_;
  Box box_;
  Mean mean_;
  Gradient grad_;
  Mean psi_;
  double noise_sd_;
  double rho_ = 0.0;
  std::optional<Point> argmax_;
};

/// f(x) = fmax - (x - x*)^T A (x - x*) on [-5, 5]^d, d in {2, 5}.
[[nodiscard]] std::shared_ptr<FunctionModel> make_quadratic(int d, double noise_sd = 0.1);

/// Sum of Gaussian bumps on [0, 10]; global maximum near x = 6.5.
[[nodiscard]] std::shared_ptr<FunctionModel> make_multimodal_1d(double noise_sd = 0.1);

/// Sum of Gaussian bumps on [0, 10]^2; global maximum near (6.5, 3).
[[nodiscard]] std::shared_ptr<FunctionModel> make_multimodal_2d(double noise_sd = 0.1);

/// Serial line whose decision variables are the station service rates.
/// Output: -(average sojourn) - cost * sum(rates). The stylized model replaces
/// the sojourn by the sum of per-station M/M/c values (exact for infinite buffers).
class TandemQueueModel : public SimulationModel {
 public:
  struct Params {
    double arrival_rate = 1.0;
    std::vector<int> servers{1, 1, 1};
    std::vector<int> buffers{4, 4};  ///< waiting room before stations 2..k
    double rate_lower = 1.2;
    double rate_upper = 3.0;
    double cost = 1.0;
    long customers = 2000;
    long warmup = 200;
  };

  explicit TandemQueueModel(Params p);

  [[nodiscard]] std::string id() const override { return "tandem_queue"; }
  [[nodiscard]] const Box& box() const override { return box_; }
  [[nodiscard]] double evaluate(const Point& x, Engine& rng) const override;
  [[nodiscard]] std::optional<double> stylized(const Point& x) const override;

  /// Average sojourn time of one replication (no cost term).
  [[nodiscard]] double simulate_sojourn(const Point& rates, Engine& rng) const;
  /// Sum of per-station M/M/c mean sojourn times.
  [[nodiscard]] double stylized_sojourn(const Point& rates) const;
  [[nodiscard]] const Params& params() const { return p_; }

 private:
  Params p_;
  Box box_;
};

/// Ids accepted by make_model().
[[nodiscard]] std::vector<std::string> model_ids();

/// Builds a testbed model from its id and optional parameters
/// (`noise_sd`, and for the queue `cost`, `customers`, `buffers`, `servers`, ...).
[[nodiscard]] std::shared_ptr<SimulationModel> make_model(const std::string& id, const KvDoc& params = {});

/// One instance of every testbed model with the given noise level.
[[nodiscard]] std::vector<std::shared_ptr<SimulationModel>> testbed_catalog(double noise_sd = 0.1);

}  // namespace simopt::sim
