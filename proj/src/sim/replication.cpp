#include "simopt/sim/replication.hpp"

#include "simopt/kv.hpp"

#include <istream>
#include <ostream>
#include <sstream>

namespace simopt::sim {

GradientSample SimulationModel::evaluate_with_gradient(const Point&, Engine&) const {
  throw CapabilityError("model '" + id() + "' does not provide gradient estimates");
}

Dataset::Dataset(Eigen::Index dim, std::vector<AggregatedObservation> obs) : dim_(dim) {
  for (auto& o : obs) add(std::move(o));
}

void Dataset::add(AggregatedObservation obs) {
  if (obs.point.size() != dim_) {
    throw DomainError("observation dimension " + std::to_string(obs.point.size()) +
                      " does not match dataset dimension " + std::to_string(dim_));
  }
  if (obs.reps < 1) throw DomainError("observation with reps < 1");
  if (obs.noise_var && *obs.noise_var < 0.0) throw DomainError("negative noise variance");
  obs_.push_back(std::move(obs));
}

Matrix Dataset::points() const {
  Matrix x(static_cast<Eigen::Index>(obs_.size()), dim_);
  for (std::size_t i = 0; i < obs_.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = obs_[i].point.transpose();
  return x;
}

Vector Dataset::means() const {
  Vector y(static_cast<Eigen::Index>(obs_.size()));
  for (std::size_t i = 0; i < obs_.size(); ++i) y[static_cast<Eigen::Index>(i)] = obs_[i].mean;
  return y;
}

bool Dataset::has_gradients() const {
  if (obs_.empty()) return false;
  for (const auto& o : obs_) {
    if (!o.grad_mean) return false;
  }
  return true;
}

Vector Dataset::noise_variances(std::optional<double> floor) const {
  Vector s(static_cast<Eigen::Index>(obs_.size()));
  for (std::size_t i = 0; i < obs_.size(); ++i) {
    if (obs_[i].noise_var) {
      s[static_cast<Eigen::Index>(i)] = *obs_[i].noise_var;
    } else if (floor) {
      s[static_cast<Eigen::Index>(i)] = *floor;
    } else {
      throw DomainError("observation " + std::to_string(i) +
                        " has unknown noise variance (single replication) and no floor was given");
    }
  }
  return s;
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  Dataset out(dim_);
  for (auto i : indices) out.add(obs_.at(i));
  return out;
}

ReplicationSet run_replications(const SimulationModel& model, const Point& point, int r, RngStream& rng) {
  if (r < 1) throw DomainError("run_replications: r must be >= 1");
  if (point.size() != model.dim()) throw DomainError("run_replications: dimension mismatch");
  if (!model.box().contains(point, 1e-12)) {
    throw FeasibilityError("run_replications: point outside the feasible box of '" + model.id() + "'");
  }
  ReplicationSet out;
  out.point = point;
  out.outputs.reserve(static_cast<std::size_t>(r));
  const bool grads = model.has_gradient();
  for (int l = 0; l < r; ++l) {
    auto engine = rng.next_engine();
    if (grads) {
      auto s = model.evaluate_with_gradient(point, engine);
      out.outputs.push_back(s.value);
      out.gradients.push_back(std::move(s.gradient));
    } else {
      out.outputs.push_back(model.evaluate(point, engine));
    }
  }
  return out;
}

AggregatedObservation aggregate(const ReplicationSet& reps) {
  if (reps.outputs.empty()) throw DomainError("aggregate: empty replication set");
  if (!reps.gradients.empty() && reps.gradients.size() != reps.outputs.size()) {
    throw DomainError("aggregate: gradients must match outputs one-to-one");
  }
  const auto r = reps.outputs.size();
  AggregatedObservation obs;
  obs.point = reps.point;
  obs.reps = static_cast<int>(r);
  double sum = 0.0;
  for (double y : reps.outputs) sum += y;
  obs.mean = sum / static_cast<double>(r);
  if (r >= 2) {
    double ss = 0.0;
    for (double y : reps.outputs) ss += (y - obs.mean) * (y - obs.mean);
    obs.noise_var = ss / static_cast<double>(r - 1) / static_cast<double>(r);
  }
  if (!reps.gradients.empty()) {
    Vector g = Vector::Zero(reps.gradients.front().size());
    for (const auto& gl : reps.gradients) g += gl;
    obs.grad_mean = g / static_cast<double>(r);
  }
  return obs;
}

Matrix pooled_value_gradient_covariance(const std::vector<ReplicationSet>& sets) {
  Eigen::Index dim = -1;
  Matrix scatter;
  std::size_t dof = 0;
  for (const auto& s : sets) {
    if (s.gradients.size() != s.outputs.size() || s.outputs.empty()) {
      throw CapabilityError("pooled covariance needs a gradient for every replication");
    }
    const auto r = static_cast<Eigen::Index>(s.outputs.size());
    if (dim < 0) {
      dim = s.gradients.front().size();
      scatter = Matrix::Zero(dim + 1, dim + 1);
    }
    Matrix z(r, dim + 1);
    for (Eigen::Index l = 0; l < r; ++l) {
      z(l, 0) = s.outputs[static_cast<std::size_t>(l)];
      z.row(l).tail(dim) = s.gradients[static_cast<std::size_t>(l)].transpose();
    }
    const Vector mean = z.colwise().mean();
    const Matrix centered = z.rowwise() - mean.transpose();
    scatter += centered.transpose() * centered;
    dof += static_cast<std::size_t>(r - 1);
  }
  if (dof == 0) throw DomainError("pooled covariance needs at least one set with two replications");
  return scatter / static_cast<double>(dof);
}

void write_dataset(std::ostream& out, const Dataset& data, char sep) {
  const auto d = data.dim();
  const bool grads = data.has_gradients();
  for (Eigen::Index j = 0; j < d; ++j) out << "x_" << (j + 1) << sep;
  out << "mean" << sep << "reps" << sep << "noise_var";
  if (grads) {
    for (Eigen::Index j = 0; j < d; ++j) out << sep << "g_" << (j + 1);
  }
  out << '\n';
  for (const auto& o : data.observations()) {
    for (Eigen::Index j = 0; j < d; ++j) out << format_double(o.point[j]) << sep;
    out << format_double(o.mean) << sep << o.reps << sep;
    if (o.noise_var) out << format_double(*o.noise_var);
    if (grads) {
      for (Eigen::Index j = 0; j < d; ++j) out << sep << format_double((*o.grad_mean)[j]);
    }
    out << '\n';
  }
}

namespace {
std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}
}  // namespace

Dataset read_dataset(std::istream& in, char sep) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("dataset: missing header");
  const auto header = split(line, sep);
  Eigen::Index d = 0;
  while (static_cast<std::size_t>(d) < header.size() && header[static_cast<std::size_t>(d)].rfind("x_", 0) == 0) ++d;
  const auto base = static_cast<std::size_t>(d) + 3;
  if (header.size() < base || header[static_cast<std::size_t>(d)] != "mean") {
    throw ConfigError("dataset: header must be x_1..x_d,mean,reps,noise_var[,g_1..g_d]");
  }
  const bool grads = header.size() == base + static_cast<std::size_t>(d);
  if (!grads && header.size() != base) throw ConfigError("dataset: unexpected number of columns");
  Dataset data(d);
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = split(line, sep);
    if (f.size() != header.size()) throw ConfigError("dataset: row " + std::to_string(row) + " has wrong width");
    AggregatedObservation o;
    o.point.resize(d);
    for (Eigen::Index j = 0; j < d; ++j) o.point[j] = std::stod(f[static_cast<std::size_t>(j)]);
    o.mean = std::stod(f[static_cast<std::size_t>(d)]);
    o.reps = std::stoi(f[static_cast<std::size_t>(d) + 1]);
    if (!f[static_cast<std::size_t>(d) + 2].empty()) o.noise_var = std::stod(f[static_cast<std::size_t>(d) + 2]);
    if (grads) {
      Vector g(d);
      for (Eigen::Index j = 0; j < d; ++j) g[j] = std::stod(f[base + static_cast<std::size_t>(j)]);
      o.grad_mean = g;
    }
    data.add(std::move(o));
  }
  return data;
}

}  // namespace simopt::sim
