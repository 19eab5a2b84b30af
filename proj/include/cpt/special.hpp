#pragma once

#include <vector>

namespace cpt {

/// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
double gamma_q(double a, double x);

/// Upper tail P(X >= x) of a chi-square with df degrees of freedom.
double chi_square_sf(double x, double df);

/// Kolmogorov-Smirnov distance between the empirical CDF of `values` and
/// the Uniform(0, 1) CDF.
double ks_uniform_distance(std::vector<double> values);

/// Asymptotic Kolmogorov distribution tail P(K > sqrt(n) * d).
double ks_pvalue(double d, std::size_t n);

} // namespace cpt
