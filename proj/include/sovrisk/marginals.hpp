#pragma once

#include "sovrisk/panel.hpp"

#include <Eigen/Dense>

#include <vector>

namespace sovrisk {

// Empirical spread distribution of one rating class: every observation
// s_c(t) with rank_c(t) = rank, pooled over countries and dates.
struct ClassMarginal {
    int rank = 0;
    std::vector<double> samples;  // ascending

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
};

// One marginal per rank 1..D (empty classes allowed, flagged downstream).
std::vector<ClassMarginal> build_marginals(const RatingPanel& ratings,
                                           const SpreadPanel& spreads);

// Right-continuous empirical CDF at y.
double ecdf(const ClassMarginal& marginal, double y);

// Generalized inverse: the smallest sample whose ECDF reaches u.
double quantile(const ClassMarginal& marginal, double u);

// Mean of the samples, which equals the integral of the empirical
// survival function for nonnegative data (the identity the reward
// recursion relies on).
double expected_class_spread(const ClassMarginal& marginal);

struct MarginalStats {
    int rank = 0;
    std::size_t count = 0;
    double mean = 0.0;
    double st_dev = 0.0;
    double skewness = 0.0;
    double kurtosis = 0.0;  // raw m4 / m2^2
};
MarginalStats marginal_stats(const ClassMarginal& marginal);

struct AnovaResult {
    double f = 0.0;        // +inf when within-variance is 0 and means differ
    double p_value = 1.0;
    std::int64_t df_between = 0;
    std::int64_t df_within = 0;
};

// One-way F test that the class spread distributions share a mean.
// Classes with no samples are skipped.
AnovaResult anova_f(const std::vector<ClassMarginal>& marginals);

struct CorrelationResult {
    Eigen::MatrixXd corr;            // N x N, symmetric, unit diagonal
    std::vector<int> zero_variance;  // country indices with constant series
};

// Pearson correlation of the country spread series. Rows/columns of
// constant series are zeroed (diagonal stays 1) and flagged.
CorrelationResult series_correlation(const SpreadPanel& spreads);

}  // namespace sovrisk
