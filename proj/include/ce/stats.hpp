// Scalar statistics helpers shared by the estimators: logistic link,
// probability clamping, sample moments, type-7 quantiles, and the standard
// normal distribution.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace ce {

inline double expit(double x) {
  double p;
  if (x >= 0.0) {
    p = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);
    p = e / (1.0 + e);
  }
  // Keep probabilities strictly inside (0, 1) at double precision.
  if (p >= 1.0) p = std::nextafter(1.0, 0.0);
  if (p <= 0.0) p = std::nextafter(0.0, 1.0);
  return p;
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

// Clamp used before taking logs of fitted probabilities; fitted values
// themselves are reported unclamped.
inline double clamp_probability(double p) {
  return std::min(std::max(p, 1e-12), 1.0 - 1e-12);
}

inline double mean(const Eigen::Ref<const Eigen::VectorXd>& x) { return x.mean(); }

// Sample variance (n-1 denominator).
inline double variance(const Eigen::Ref<const Eigen::VectorXd>& x) {
  const auto n = x.size();
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const double m = x.mean();
  return (x.array() - m).square().sum() / static_cast<double>(n - 1);
}

inline double sd(const Eigen::Ref<const Eigen::VectorXd>& x) { return std::sqrt(variance(x)); }

// Quantile with linear interpolation between order statistics (type 7):
// h = (n-1)p, Q = x_(floor(h)) + frac(h) * (x_(floor(h)+1) - x_(floor(h))).
// Results depend on this choice; every quantile in the library uses it.
double quantile_type7(std::vector<double> x, double p);
Eigen::VectorXd quantiles_type7(const Eigen::Ref<const Eigen::VectorXd>& x,
                                const std::vector<double>& probs);

// Standard normal CDF.
double norm_cdf(double x);
// Standard normal quantile function (Wichura's AS 241, double precision).
double norm_quantile(double p);

}  // namespace ce
