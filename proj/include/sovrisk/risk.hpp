#pragma once

#include "sovrisk/markov.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace sovrisk {

// Probability distribution of credit-spread shares over countries.
struct ShareVector {
    std::vector<double> shares;

    // shares = spread_c / total spread. Throws on negative entries and on
    // an all-zero vector (the Theil index is undefined there; callers
    // skip and flag that event). The total is accumulated in sorted
    // order, so permuting the input permutes the output exactly.
    static ShareVector from_spreads(const std::vector<double>& spreads);
};

// Theil index sum p_i log(N p_i), natural log, zero shares contributing
// zero. Terms are summed in sorted order, making the value exactly
// invariant under permutation of the shares; the mathematically
// guaranteed range [0, log N] is enforced against rounding noise.
double theil_index(const ShareVector& shares);

struct TheilDecomposition {
    double total = 0.0;
    double inter = 0.0;                // inequality between rating classes
    double intra = 0.0;                // share-weighted inequality within classes
    std::vector<double> class_share;   // q_x per rank, sums to 1
    std::vector<double> within;        // Theil index inside each class
};

// Additive split of the Theil index by rating class: the between-class
// term compares class shares against class sizes, and the within-class
// term averages the conditional Theil indices with weights q_x. The two
// parts sum back to the total.
TheilDecomposition theil_decompose(const std::vector<double>& spreads,
                                   const std::vector<int>& ranks, int dim);

// Markov reward model: rating dynamics plus expected spread per class
// and the initial allocation of countries.
struct RewardModel {
    SegmentedChainModel chain;
    std::vector<double> class_means;  // E[W_j], size D
    std::vector<int> initial_ranks;   // per country, 1-based
    std::vector<int> initial_counts;  // countries per rank, size D

    static RewardModel make(SegmentedChainModel chain, std::vector<double> class_means,
                            std::vector<int> initial_ranks);
};

// V_i(t) for t = 0..t_max: expected cumulative spread of a country
// starting in rank i, by the one-step recursion over the propagated
// state distribution. Column i-1 of the matrix version.
std::vector<double> expected_total_spread_path(const RewardModel& model, int rank,
                                               std::int64_t t_max);
double expected_total_spread_by_rank(const RewardModel& model, int rank, std::int64_t t);

// All ranks at once: (t_max + 1) x D, row t holding V_1(t)..V_D(t).
Eigen::MatrixXd expected_total_spread_table(const RewardModel& model, std::int64_t t_max);

// Aggregate V(t) = sum_j n_j(0) V_j(t).
double expected_total_spread(const RewardModel& model, std::int64_t t);

// Cross-moment table E[W_a W_b] under independence: the outer product of
// the class means. Closed-form counterpart of the Monte Carlo tables.
Eigen::MatrixXd independent_second_moments(const std::vector<double>& class_means);

// V_alpha_beta(t) for two distinct countries, t = 0..t_max: the
// product-moment recursion with the pair's E[W_a W_b] table. The
// per-country paths are produced by the same loop so that the covariance
// V_ab - V_a V_b telescopes cleanly under an independence table.
struct PairMomentPaths {
    std::vector<double> v_a;
    std::vector<double> v_b;
    std::vector<double> v_ab;
};
PairMomentPaths pair_moment_paths(const RewardModel& model,
                                  const Eigen::MatrixXd& second_moments, int country_a,
                                  int country_b, std::int64_t t_max);
std::vector<double> product_moment_path(const RewardModel& model,
                                        const Eigen::MatrixXd& second_moments, int country_a,
                                        int country_b, std::int64_t t_max);
double product_moment(const RewardModel& model, const Eigen::MatrixXd& second_moments,
                      int country_a, int country_b, std::int64_t t);

// sigma(t) = V_ab(t) - V_a(t) V_b(t).
double total_spread_covariance(const RewardModel& model, const Eigen::MatrixXd& second_moments,
                               int country_a, int country_b, std::int64_t t);

struct CovarianceResult {
    double sigma = 0.0;
    double rho = 0.0;
    bool rho_defined = false;  // false when either variance is zero
};

// Covariance plus correlation; the per-country standard deviations of
// the cumulative spread have no closed form here and are supplied by the
// caller (Monte Carlo estimates in practice).
CovarianceResult spread_correlation(const RewardModel& model,
                                    const Eigen::MatrixXd& second_moments, int country_a,
                                    int country_b, std::int64_t t, double sd_a, double sd_b);

}  // namespace sovrisk
