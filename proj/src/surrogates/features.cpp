#include "simopt/surrogates/features.hpp"

#include <cmath>

namespace simopt::surrogates {

Matrix FeatureMap::jacobian(const Point&) const {
  throw CapabilityError("feature map '" + describe().get_string("kind", "?") + "' has no jacobian");
}

Matrix FeatureMap::design_matrix(const Matrix& points) const {
  Matrix phi(points.rows(), size());
  for (Eigen::Index i = 0; i < points.rows(); ++i) phi.row(i) = evaluate(points.row(i).transpose()).transpose();
  return phi;
}

namespace {

class PolynomialFeatures final : public FeatureMap {
 public:
  PolynomialFeatures(Eigen::Index d, int order) : d_(d), order_(order) {
    if (d < 1) throw DomainError("polynomial features: d must be >= 1");
    if (order != 1 && order != 2) throw DomainError("polynomial features: order must be 1 or 2");
  }

  [[nodiscard]] Eigen::Index size() const override { return 1 + d_ + (order_ == 2 ? d_ * (d_ + 1) / 2 : 0); }
  [[nodiscard]] Eigen::Index dim() const override { return d_; }

  [[nodiscard]] Vector evaluate(const Point& x) const override {
    check(x);
    Vector phi(size());
    phi[0] = 1.0;
    phi.segment(1, d_) = x;
    Eigen::Index k = 1 + d_;
    if (order_ == 2) {
      for (Eigen::Index i = 0; i < d_; ++i) {
        for (Eigen::Index j = i; j < d_; ++j) phi[k++] = x[i] * x[j];
      }
    }
    return phi;
  }

  [[nodiscard]] bool has_jacobian() const override { return true; }

  [[nodiscard]] Matrix jacobian(const Point& x) const override {
    check(x);
    Matrix jac = Matrix::Zero(size(), d_);
    jac.block(1, 0, d_, d_).setIdentity();
    Eigen::Index k = 1 + d_;
    if (order_ == 2) {
      for (Eigen::Index i = 0; i < d_; ++i) {
        for (Eigen::Index j = i; j < d_; ++j, ++k) {
          jac(k, i) += x[j];
          jac(k, j) += x[i];
        }
      }
    }
    return jac;
  }

  [[nodiscard]] KvDoc describe() const override {
    KvDoc doc;
    doc.set("kind", "polynomial");
    doc.set("dim", static_cast<long long>(d_));
    doc.set("order", order_);
    return doc;
  }

 private:
  void check(const Point& x) const {
    if (x.size() != d_) throw DomainError("polynomial features: dimension mismatch");
  }
  Eigen::Index d_;
  int order_;
};

class RbfFeatures final : public FeatureMap {
 public:
  RbfFeatures(std::vector<Point> centers, RbfKind kind, double eta)
      : centers_(std::move(centers)), kind_(kind), eta_(eta) {
    if (centers_.empty()) throw DomainError("rbf features: no centers");
    if (kind == RbfKind::gaussian && !(eta > 0.0)) throw DomainError("rbf features: eta must be positive");
    for (const auto& c : centers_) {
      if (c.size() != centers_.front().size()) throw DomainError("rbf features: centers differ in dimension");
    }
  }

  [[nodiscard]] Eigen::Index size() const override { return static_cast<Eigen::Index>(centers_.size()); }
  [[nodiscard]] Eigen::Index dim() const override { return centers_.front().size(); }

  [[nodiscard]] Vector evaluate(const Point& x) const override {
    if (x.size() != dim()) throw DomainError("rbf features: dimension mismatch");
    Vector phi(size());
    for (Eigen::Index k = 0; k < size(); ++k) {
      const double r2 = (x - centers_[static_cast<std::size_t>(k)]).squaredNorm();
      if (kind_ == RbfKind::gaussian) {
        phi[k] = std::exp(-r2 / (2.0 * eta_ * eta_));
      } else {
        phi[k] = r2 > 0.0 ? 0.5 * r2 * std::log(r2) : 0.0;
      }
    }
    return phi;
  }

  [[nodiscard]] bool has_jacobian() const override { return true; }

  [[nodiscard]] Matrix jacobian(const Point& x) const override {
    Matrix jac(size(), dim());
    for (Eigen::Index k = 0; k < size(); ++k) {
      const Vector diff = x - centers_[static_cast<std::size_t>(k)];
      const double r2 = diff.squaredNorm();
      double scale = 0.0;
      if (kind_ == RbfKind::gaussian) {
        scale = -std::exp(-r2 / (2.0 * eta_ * eta_)) / (eta_ * eta_);
      } else if (r2 > 0.0) {
        scale = std::log(r2) + 1.0;  // d/dx (r^2 ln r) = (2 ln r + 1)(x - c)
      }
      jac.row(k) = scale * diff.transpose();
    }
    return jac;
  }

  [[nodiscard]] KvDoc describe() const override {
    KvDoc doc;
    doc.set("kind", kind_ == RbfKind::gaussian ? "rbf_gaussian" : "rbf_thin_plate");
    doc.set("eta", eta_);
    doc.set("centers", static_cast<long long>(centers_.size()));
    for (std::size_t k = 0; k < centers_.size(); ++k) doc.set("center." + std::to_string(k), centers_[k]);
    return doc;
  }

 private:
  std::vector<Point> centers_;
  RbfKind kind_;
  double eta_;
};

class StylizedAugmented final : public FeatureMap {
 public:
  StylizedAugmented(FeatureMapPtr base, Stylized psi, std::string name, StylizedGradient grad)
      : base_(std::move(base)), psi_(std::move(psi)), name_(std::move(name)), grad_(std::move(grad)) {
    if (!base_ || !psi_) throw DomainError("augment_with_stylized: null base or psi");
  }

  [[nodiscard]] Eigen::Index size() const override { return base_->size() + 1; }
  [[nodiscard]] Eigen::Index dim() const override { return base_->dim(); }

  [[nodiscard]] Vector evaluate(const Point& x) const override {
    Vector phi(size());
    phi.head(base_->size()) = base_->evaluate(x);
    phi[base_->size()] = psi_(x);
    return phi;
  }

  [[nodiscard]] bool has_jacobian() const override { return base_->has_jacobian() && static_cast<bool>(grad_); }

  [[nodiscard]] Matrix jacobian(const Point& x) const override {
    if (!has_jacobian()) return FeatureMap::jacobian(x);
    Matrix jac(size(), dim());
    jac.topRows(base_->size()) = base_->jacobian(x);
    jac.row(base_->size()) = grad_(x).transpose();
    return jac;
  }

  [[nodiscard]] KvDoc describe() const override {
    KvDoc doc;
    doc.set("kind", "stylized");
    doc.set("psi", name_);
    doc.merge("base", base_->describe());
    return doc;
  }

 private:
  FeatureMapPtr base_;
  Stylized psi_;
  std::string name_;
  StylizedGradient grad_;
};

}  // namespace

FeatureMapPtr polynomial_features(Eigen::Index d, int order) { return std::make_shared<PolynomialFeatures>(d, order); }

FeatureMapPtr rbf_features(std::vector<Point> centers, RbfKind kind, double eta) {
  return std::make_shared<RbfFeatures>(std::move(centers), kind, eta);
}

FeatureMapPtr augment_with_stylized(FeatureMapPtr base, Stylized psi, std::string name,
                                    StylizedGradient psi_gradient) {
  return std::make_shared<StylizedAugmented>(std::move(base), std::move(psi), std::move(name),
                                             std::move(psi_gradient));
}

FeatureMapPtr feature_map_from_kv(const KvDoc& doc, const StylizedResolver& resolve) {
  const auto kind = doc.get_string("kind", "");
  if (kind == "polynomial") {
    return polynomial_features(doc.get_int("dim"), static_cast<int>(doc.get_int("order")));
  }
  if (kind == "rbf_gaussian" || kind == "rbf_thin_plate") {
    std::vector<Point> centers;
    const auto count = doc.get_int("centers");
    for (long long k = 0; k < count; ++k) centers.push_back(doc.get_vector("center." + std::to_string(k)));
    return rbf_features(std::move(centers), kind == "rbf_gaussian" ? RbfKind::gaussian : RbfKind::thin_plate,
                        doc.get_double("eta", 1.0));
  }
  if (kind == "stylized") {
    const auto name = doc.at("psi");
    if (!resolve) throw ConfigError("feature map uses stylized model '" + name + "' but no resolver was given");
    auto psi = resolve(name);
    if (!psi) throw ConfigError("unknown stylized model '" + name + "'");
    return augment_with_stylized(feature_map_from_kv(doc.subtree("base"), resolve), std::move(psi), name);
  }
  throw ConfigError("unknown feature map kind '" + kind + "'");
}

}  // namespace simopt::surrogates
