#include "simopt/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>

namespace simopt::stats {

MeanVar mean_var(std::span<const double> values) {
  MeanVar out;
  out.count = values.size();
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.variance = ss / static_cast<double>(values.size() - 1);
  }
  return out;
}

double student_t_upper(double alpha, double dof) {
  boost::math::students_t dist(dof);
  return boost::math::quantile(boost::math::complement(dist, alpha));
}

double fisher_f_upper(double alpha, double dof1, double dof2) {
  boost::math::fisher_f dist(dof1, dof2);
  return boost::math::quantile(boost::math::complement(dist, alpha));
}

double chi_square_upper(double alpha, double dof) {
  boost::math::chi_squared dist(dof);
  return boost::math::quantile(boost::math::complement(dist, alpha));
}

bool welch_greater(const MeanVar& a, const MeanVar& b, double alpha) {
  const double diff = a.mean - b.mean;
  if (a.count == 0 || b.count == 0) return false;
  const double va = a.count >= 2 ? a.variance / static_cast<double>(a.count) : 0.0;
  const double vb = b.count >= 2 ? b.variance / static_cast<double>(b.count) : 0.0;
  const double se2 = va + vb;
  if (se2 <= 0.0) return diff > 0.0;
  const double t = diff / std::sqrt(se2);
  // Welch-Satterthwaite degrees of freedom
  double dof = 0.0;
  double denom = 0.0;
  if (a.count >= 2) denom += va * va / static_cast<double>(a.count - 1);
  if (b.count >= 2) denom += vb * vb / static_cast<double>(b.count - 1);
  dof = denom > 0.0 ? se2 * se2 / denom : 1.0;
  dof = std::max(dof, 1.0);
  return t > student_t_upper(alpha, dof);
}

}  // namespace simopt::stats
