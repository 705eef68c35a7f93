#include "feval/normal.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/special_functions/erf.hpp>

#include "feval/errors.hpp"

namespace feval {

namespace {
constexpr double kLogSqrt2Pi = 0.91893853320467274178;
}

double normal_pdf(double x) { return std::exp(normal_log_pdf(x)); }

double normal_log_pdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("normal quantile requires p in (0, 1), got " + std::to_string(p));
  }
  // erfc_inv is accurate in both tails; computing via erf_inv would lose the
  // lower tail to cancellation.
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double critical_value(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError("significance level must lie in (0, 1), got " + std::to_string(alpha));
  }
  return -normal_quantile(alpha / 2.0);
}

}  // namespace feval
