#pragma once

#include <span>

namespace spanel::stats {

double mean(std::span<const double> x);

// sample variance (divides by n-1)
double variance(std::span<const double> x);

double sd(std::span<const double> x);

// Pearson correlation; 0 when either side is constant
double correlation(std::span<const double> x, std::span<const double> y);

// standard normal CDF / upper tail
double normal_cdf(double z);
double normal_sf(double z);

// two-tailed p-value for a standard normal statistic
double normal_two_tailed_p(double z);

// regularized incomplete gamma functions P(a,x) and Q(a,x)
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// chi-squared upper-tail probability with df degrees of freedom
double chisq_sf(double x, double df);

}  // namespace spanel::stats
