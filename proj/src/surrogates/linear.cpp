#include "simopt/surrogates/linear.hpp"

#include "simopt/linalg.hpp"

namespace simopt::surrogates {

namespace {

const char* kind_name(FitKind k) {
  switch (k) {
    case FitKind::ols:
      return "ols";
    case FitKind::rls:
      return "rls";
    case FitKind::gls:
      return "gls";
  }
  return "?";
}

void check_data(const FeatureMap& features, const Matrix& points, const Vector& y) {
  if (points.rows() < 1) throw DomainError("fit: no observations");
  if (points.cols() != features.dim()) throw DomainError("fit: feature map dimension does not match the data");
  if (points.rows() != y.size()) throw DomainError("fit: size mismatch");
}

}  // namespace

KvDoc LinearSurrogate::to_kv() const {
  KvDoc doc;
  doc.set("fit", kind_name(kind));
  doc.set("lambda", lambda);
  doc.set("beta", beta);
  doc.merge("features", features->describe());
  return doc;
}

LinearSurrogate LinearSurrogate::from_kv(const KvDoc& doc, const StylizedResolver& resolve) {
  LinearSurrogate s;
  s.features = feature_map_from_kv(doc.subtree("features"), resolve);
  s.beta = doc.get_vector("beta");
  if (s.beta.size() != s.features->size()) throw ConfigError("surrogate: beta length does not match features");
  const auto fit = doc.get_string("fit", "ols");
  s.kind = fit == "rls" ? FitKind::rls : fit == "gls" ? FitKind::gls : FitKind::ols;
  s.lambda = doc.get_double("lambda", 0.0);
  return s;
}

LinearSurrogate fit_ols(FeatureMapPtr features, const Matrix& points, const Vector& y) {
  check_data(*features, points, y);
  const Matrix phi = features->design_matrix(points);
  Eigen::ColPivHouseholderQR<Matrix> qr(phi);
  if (qr.rank() < phi.cols()) {
    throw RankDeficiencyError("OLS: design matrix has rank " + std::to_string(qr.rank()) + " < p = " +
                              std::to_string(phi.cols()) + "; use fit_rls with lambda > 0");
  }
  return {std::move(features), qr.solve(y), FitKind::ols, 0.0};
}

LinearSurrogate fit_ols(FeatureMapPtr features, const sim::Dataset& data) {
  return fit_ols(std::move(features), data.points(), data.means());
}

LinearSurrogate fit_rls(FeatureMapPtr features, const Matrix& points, const Vector& y, double lambda) {
  if (!(lambda >= 0.0)) throw DomainError("RLS: lambda must be nonnegative");
  check_data(*features, points, y);
  const Matrix phi = features->design_matrix(points);
  const auto n = phi.rows();
  if (lambda == 0.0) {
    if (n > phi.cols()) {
      auto s = fit_ols(std::move(features), points, y);
      s.kind = FitKind::rls;
      return s;
    }
    const Matrix gram = phi * phi.transpose();
    return {std::move(features), phi.transpose() * linalg::lu_solve(gram, y), FitKind::rls, 0.0};
  }
  Matrix a = phi * phi.transpose();
  a.diagonal().array() += static_cast<double>(n) * lambda;
  const linalg::Cholesky chol(a);
  return {std::move(features), phi.transpose() * chol.solve(y), FitKind::rls, lambda};
}

LinearSurrogate fit_rls(FeatureMapPtr features, const sim::Dataset& data, double lambda) {
  return fit_rls(std::move(features), data.points(), data.means(), lambda);
}

AugmentedSystem build_augmented_system(const FeatureMap& features, const sim::Dataset& data) {
  if (!features.has_jacobian()) throw CapabilityError("augmented system: feature map has no jacobian");
  if (!data.has_gradients()) throw CapabilityError("augmented system: every observation needs a mean gradient");
  const auto d = data.dim();
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto p = features.size();
  AugmentedSystem sys{Matrix(n * (d + 1), p), Vector(n * (d + 1)), {}};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& o = data[static_cast<std::size_t>(i)];
    const Eigen::Index r0 = i * (d + 1);
    sys.phi.row(r0) = features.evaluate(o.point).transpose();
    sys.y[r0] = o.mean;
    const Matrix jac = features.jacobian(o.point);
    for (Eigen::Index j = 0; j < d; ++j) {
      sys.phi.row(r0 + 1 + j) = jac.col(j).transpose();
      sys.y[r0 + 1 + j] = (*o.grad_mean)[j];
    }
    sys.reps.push_back(o.reps);
  }
  return sys;
}

LinearSurrogate fit_gls_with_gradients(FeatureMapPtr features, const sim::Dataset& data, const Matrix& v) {
  const auto d = data.dim();
  if (v.rows() != d + 1 || v.cols() != d + 1) throw DomainError("GLS: V must be (d+1) x (d+1)");
  if (!v.isApprox(v.transpose(), 1e-12)) throw DomainError("GLS: V must be symmetric");
  Eigen::LLT<Matrix> vllt(v);
  if (vllt.info() != Eigen::Success) throw DomainError("GLS: V must be positive definite");
  const Matrix vinv = vllt.solve(Matrix::Identity(d + 1, d + 1));
  const auto sys = build_augmented_system(*features, data);
  const auto p = features->size();
  Matrix normal = Matrix::Zero(p, p);
  Vector rhs = Vector::Zero(p);
  for (std::size_t i = 0; i < sys.reps.size(); ++i) {
    const auto r0 = static_cast<Eigen::Index>(i) * (d + 1);
    const auto block = sys.phi.middleRows(r0, d + 1);
    const Matrix w = static_cast<double>(sys.reps[i]) * vinv;  // (V / r_i)^{-1}
    normal.noalias() += block.transpose() * w * block;
    rhs.noalias() += block.transpose() * w * sys.y.segment(r0, d + 1);
  }
  Eigen::FullPivLU<Matrix> lu(normal);
  if (!lu.isInvertible()) throw RankDeficiencyError("GLS: normal matrix is singular");
  return {std::move(features), lu.solve(rhs), FitKind::gls, 0.0};
}

LinearSurrogate fit_augmented_ols(FeatureMapPtr features, const sim::Dataset& data) {
  const auto sys = build_augmented_system(*features, data);
  Eigen::ColPivHouseholderQR<Matrix> qr(sys.phi);
  if (qr.rank() < sys.phi.cols()) throw RankDeficiencyError("augmented OLS: rank deficient");
  return {std::move(features), qr.solve(sys.y), FitKind::ols, 0.0};
}

Vector krr_predict(const gp::Kernel& kernel, const Matrix& points, const Vector& y, double lambda,
                   const Matrix& queries) {
  if (!(lambda > 0.0)) throw DomainError("KRR: lambda must be positive");
  if (points.rows() != y.size()) throw DomainError("KRR: size mismatch");
  Matrix k = kernel.gram(points);
  k.diagonal().array() += static_cast<double>(points.rows()) * lambda;
  const linalg::Cholesky chol(k);
  const Vector alpha = chol.solve(y);
  return kernel.cross(queries, points) * alpha;
}

double krr_predict(const gp::Kernel& kernel, const sim::Dataset& data, double lambda, const Point& x) {
  return krr_predict(kernel, data.points(), data.means(), lambda, Matrix(x.transpose()))[0];
}

}  // namespace simopt::surrogates
