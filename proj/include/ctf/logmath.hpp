#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <span>

namespace ctf {

inline double log_sum_exp(std::span<const double> logw) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : logw)
    if (v > m) m = v;
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : logw) s += std::exp(v - m);
  return m + std::log(s);
}

inline double log_sum_exp(const Eigen::VectorXd& logw) {
  return log_sum_exp(std::span<const double>(logw.data(), static_cast<std::size_t>(logw.size())));
}

// log of the multivariate beta function B(a) = prod Gamma(a_i) / Gamma(sum a_i).
inline double lbeta_vec(const Eigen::VectorXd& a) {
  double s = 0.0, tot = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    s += std::lgamma(a[i]);
    tot += a[i];
  }
  return s - std::lgamma(tot);
}

// log ascending factorial log x^(m) = log Gamma(x+m) - log Gamma(x).
inline double log_rising(double x, int m) {
  if (m == 0) return 0.0;
  return std::lgamma(x + m) - std::lgamma(x);
}

}  // namespace ctf
