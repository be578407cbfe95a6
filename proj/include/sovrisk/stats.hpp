#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sovrisk {

// Standard normal CDF.
double norm_cdf(double x);

// Standard normal quantile, Wichura's AS 241 rational approximations
// (double-precision branch). Throws std::invalid_argument outside (0, 1).
double normal_quantile(double p);

// Regularized incomplete gamma functions P(a, x) and Q(a, x) = 1 - P(a, x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

// Chi-square CDF / survival function with k degrees of freedom.
double chi2_cdf(double x, double k);
double chi2_sf(double x, double k);

// F distribution CDF / survival function with (d1, d2) degrees of freedom.
double f_cdf(double x, double d1, double d2);
double f_sf(double x, double d1, double d2);

// Sample moments: mean, standard deviation (n-1 denominator), skewness
// m3 / m2^1.5 and raw kurtosis m4 / m2^2 (population central moments).
struct Moments {
    std::size_t n = 0;
    double mean = 0.0;
    double st_dev = 0.0;
    double skewness = 0.0;
    double kurtosis = 0.0;
};
Moments sample_moments(std::span<const double> xs);

double mean_of(std::span<const double> xs);
double variance_of(std::span<const double> xs);  // n-1 denominator

// Nearest-rank quantile of an ascending-sorted sample: the ceil(q*n)-th
// order statistic, clamped to the sample range.
double nearest_rank_quantile(const std::vector<double>& sorted, double q);

// Sums terms after sorting them by value, making the result invariant
// under permutation of the inputs (FP addition commutes; only the order
// of unequal addends matters). Used where exact permutation symmetry is
// part of the contract.
double permutation_invariant_sum(std::vector<double> terms);

// Pearson correlation of two equal-length series; 0 if either is constant.
double pearson(std::span<const double> x, std::span<const double> y);

// Midrank-based Spearman correlation (test/diagnostic helper).
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace sovrisk
