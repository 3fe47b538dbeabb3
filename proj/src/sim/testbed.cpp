#include "simopt/sim/testbed.hpp"

#include <cmath>
#include <sstream>

namespace simopt::sim {

FunctionModel::FunctionModel(std::string id, Box box, Mean mean, double noise_sd)
    : id_(std::move(id)), box_(std::move(box)), mean_(std::move(mean)), noise_sd_(noise_sd) {
  if (!(noise_sd >= 0.0)) throw DomainError("noise_sd must be nonnegative");
}

FunctionModel& FunctionModel::with_gradient(Gradient grad, double rho) {
  if (!(rho >= 0.0 && rho < 1.0)) throw DomainError("gradient noise correlation must be in [0, 1)");
  grad_ = std::move(grad);
  rho_ = rho;
  return *this;
}

FunctionModel& FunctionModel::with_argmax(Point argmax) {
  argmax_ = std::move(argmax);
  return *this;
}

FunctionModel& FunctionModel::with_stylized(Mean psi) {
  psi_ = std::move(psi);
  return *this;
}

double FunctionModel::evaluate(const Point& x, Engine& rng) const {
  std::normal_distribution<double> z;
  return mean_(x) + noise_sd_ * z(rng);
}

GradientSample FunctionModel::evaluate_with_gradient(const Point& x, Engine& rng) const {
  if (!grad_) return SimulationModel::evaluate_with_gradient(x, rng);
  std::normal_distribution<double> z;
  const double common = z(rng);
  const double a = std::sqrt(rho_);
  const double b = std::sqrt(1.0 - rho_);
  GradientSample s;
  s.value = mean_(x) + noise_sd_ * (a * common + b * z(rng));
  s.gradient = grad_(x);
  for (Eigen::Index j = 0; j < s.gradient.size(); ++j) s.gradient[j] += noise_sd_ * (a * common + b * z(rng));
  return s;
}

std::optional<double> FunctionModel::stylized(const Point& x) const {
  if (!psi_) return std::nullopt;
  return psi_(x);
}

std::optional<double> FunctionModel::known_max() const {
  if (!argmax_) return std::nullopt;
  return mean_(*argmax_);
}

Matrix FunctionModel::value_gradient_noise_cov() const {
  const auto d = box_.dim();
  const double v = noise_sd_ * noise_sd_;
  Matrix cov = Matrix::Constant(d + 1, d + 1, rho_ * v);
  cov.diagonal().setConstant(v);
  return cov;
}

namespace {

Box cube(int d, double lo, double hi) { return Box{Vector::Constant(d, lo), Vector::Constant(d, hi)}; }

struct Bump {
  Point center;
  double height;
  double width;
};

double bumps_value(const std::vector<Bump>& bumps, const Point& x) {
  double f = 0.0;
  for (const auto& b : bumps) f += b.height * std::exp(-(x - b.center).squaredNorm() / (2.0 * b.width * b.width));
  return f;
}

Vector bumps_gradient(const std::vector<Bump>& bumps, const Point& x) {
  Vector g = Vector::Zero(x.size());
  for (const auto& b : bumps) {
    const double w2 = b.width * b.width;
    const Vector diff = x - b.center;
    g -= b.height * std::exp(-diff.squaredNorm() / (2.0 * w2)) / w2 * diff;
  }
  return g;
}

Matrix bumps_hessian(const std::vector<Bump>& bumps, const Point& x) {
  const auto d = x.size();
  Matrix h = Matrix::Zero(d, d);
  for (const auto& b : bumps) {
    const double w2 = b.width * b.width;
    const Vector diff = x - b.center;
    const double e = b.height * std::exp(-diff.squaredNorm() / (2.0 * w2));
    h += e * (diff * diff.transpose() / (w2 * w2) - Matrix::Identity(d, d) / w2);
  }
  return h;
}

/// Newton refinement of the dominant bump's center to the true local maximum.
Point refine_max(const std::vector<Bump>& bumps, Point x) {
  for (int it = 0; it < 50; ++it) {
    const Vector g = bumps_gradient(bumps, x);
    if (g.norm() < 1e-14) break;
    x -= bumps_hessian(bumps, x).ldlt().solve(g);
  }
  return x;
}

std::shared_ptr<FunctionModel> bumps_model(std::string id, int d, std::vector<Bump> bumps, double noise_sd) {
  const Point argmax = refine_max(bumps, bumps.front().center);
  auto model = std::make_shared<FunctionModel>(
      std::move(id), cube(d, 0.0, 10.0), [bumps](const Point& x) { return bumps_value(bumps, x); }, noise_sd);
  model->with_gradient([bumps](const Point& x) { return bumps_gradient(bumps, x); });
  model->with_argmax(argmax);
  return model;
}

}  // namespace

std::shared_ptr<FunctionModel> make_quadratic(int d, double noise_sd) {
  Point xstar(d);
  Matrix a(d, d);
  if (d == 2) {
    xstar << 1.0, -0.5;
    a << 1.0, 0.3, 0.3, 0.5;
  } else if (d == 5) {
    xstar << 1.0, -1.0, 0.5, 2.0, -2.0;
    a = Matrix::Constant(5, 5, 0.1);
    a.diagonal() << 1.0, 0.8, 0.6, 0.5, 0.4;
  } else {
    throw DomainError("quadratic testbed supports d in {2, 5}");
  }
  constexpr double fmax = 10.0;
  auto model = std::make_shared<FunctionModel>(
      "quadratic" + std::to_string(d) + "d", cube(d, -5.0, 5.0),
      [xstar, a](const Point& x) {
        const Vector diff = x - xstar;
        return fmax - diff.dot(a * diff);
      },
      noise_sd);
  model->with_gradient([xstar, a](const Point& x) -> Vector { return -2.0 * a * (x - xstar); });
  model->with_argmax(xstar);
  return model;
}

std::shared_ptr<FunctionModel> make_multimodal_1d(double noise_sd) {
  auto p = [](double v) { return Point::Constant(1, v); };
  return bumps_model("multimodal1d", 1, {{p(6.5), 1.0, 0.5}, {p(2.5), 0.75, 0.7}, {p(9.0), 0.55, 0.4}}, noise_sd);
}

std::shared_ptr<FunctionModel> make_multimodal_2d(double noise_sd) {
  auto p = [](double a, double b) {
    Point x(2);
    x << a, b;
    return x;
  };
  return bumps_model("multimodal2d", 2,
                     {{p(6.5, 3.0), 1.0, 1.0}, {p(2.5, 7.0), 0.8, 1.2}, {p(8.0, 8.0), 0.6, 0.8}, {p(2.0, 2.0), 0.5, 1.0}},
                     noise_sd);
}

TandemQueueModel::TandemQueueModel(Params p) : p_(std::move(p)) {
  const auto k = p_.servers.size();
  if (k == 0) throw DomainError("tandem_queue: at least one station");
  if (p_.buffers.size() + 1 != k) throw DomainError("tandem_queue: need one buffer per station after the first");
  if (!(p_.rate_lower > 0.0 && p_.rate_lower < p_.rate_upper)) throw DomainError("tandem_queue: bad rate bounds");
  for (int c : p_.servers) {
    if (!(p_.arrival_rate < c * p_.rate_lower)) {
      throw DomainError("tandem_queue: lower rate bound must keep every station stable");
    }
  }
  const auto d = static_cast<Eigen::Index>(k);
  box_ = Box{Vector::Constant(d, p_.rate_lower), Vector::Constant(d, p_.rate_upper)};
}

double TandemQueueModel::simulate_sojourn(const Point& rates, Engine& rng) const {
  TandemConfig cfg;
  cfg.arrival_rate = p_.arrival_rate;
  cfg.customers = p_.customers;
  cfg.warmup = p_.warmup;
  for (std::size_t j = 0; j < p_.servers.size(); ++j) {
    Station s;
    s.servers = p_.servers[j];
    s.service_rate = rates[static_cast<Eigen::Index>(j)];
    if (j > 0) s.buffer = p_.buffers[j - 1];
    cfg.stations.push_back(s);
  }
  return simulate_tandem(cfg, rng);
}

double TandemQueueModel::stylized_sojourn(const Point& rates) const {
  double total = 0.0;
  for (std::size_t j = 0; j < p_.servers.size(); ++j) {
    total += stylized_queue_mean_los(p_.arrival_rate, rates[static_cast<Eigen::Index>(j)], p_.servers[j]);
  }
  return total;
}

double TandemQueueModel::evaluate(const Point& x, Engine& rng) const {
  return -simulate_sojourn(x, rng) - p_.cost * x.sum();
}

std::optional<double> TandemQueueModel::stylized(const Point& x) const {
  return -stylized_sojourn(box_.project(x)) - p_.cost * x.sum();
}

std::vector<std::string> model_ids() {
  return {"quadratic2d", "quadratic5d", "multimodal1d", "multimodal2d", "tandem_queue"};
}

namespace {
std::vector<int> int_list(const KvDoc& doc, const std::string& key, std::vector<int> fallback) {
  if (!doc.has(key)) return fallback;
  std::vector<int> out;
  const Vector v = doc.get_vector(key);
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(static_cast<int>(v[i]));
  return out;
}
}  // namespace

std::shared_ptr<SimulationModel> make_model(const std::string& id, const KvDoc& params) {
  const double noise = params.get_double("noise_sd", 0.1);
  if (id == "quadratic2d") return make_quadratic(2, noise);
  if (id == "quadratic5d") return make_quadratic(5, noise);
  if (id == "multimodal1d") return make_multimodal_1d(noise);
  if (id == "multimodal2d") return make_multimodal_2d(noise);
  if (id == "tandem_queue") {
    TandemQueueModel::Params p;
    p.arrival_rate = params.get_double("arrival_rate", p.arrival_rate);
    p.servers = int_list(params, "servers", p.servers);
    p.buffers = int_list(params, "buffers", p.buffers);
    p.rate_lower = params.get_double("rate_lower", p.rate_lower);
    p.rate_upper = params.get_double("rate_upper", p.rate_upper);
    p.cost = params.get_double("cost", p.cost);
    p.customers = params.get_int("customers", p.customers);
    p.warmup = params.get_int("warmup", p.warmup);
    return std::make_shared<TandemQueueModel>(p);
  }
  throw ConfigError("unknown model id '" + id + "'");
}

std::vector<std::shared_ptr<SimulationModel>> testbed_catalog(double noise_sd) {
  KvDoc params;
  params.set("noise_sd", noise_sd);
  std::vector<std::shared_ptr<SimulationModel>> out;
  for (const auto& id : model_ids()) out.push_back(make_model(id, params));
  return out;
}

}  // namespace simopt::sim
