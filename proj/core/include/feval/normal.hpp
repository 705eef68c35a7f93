#pragma once

// Standard normal distribution helpers.

namespace feval {

double normal_pdf(double x);
double normal_log_pdf(double x);
double normal_cdf(double x);
// Inverse CDF. Throws DomainError outside (0, 1).
double normal_quantile(double p);

// Two-tailed critical value c_alpha = Phi^{-1}(1 - alpha / 2).
double critical_value(double alpha);

}  // namespace feval
