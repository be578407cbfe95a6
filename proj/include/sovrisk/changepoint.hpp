#pragma once

#include "sovrisk/markov.hpp"
#include "sovrisk/panel.hpp"

#include <cstdint>
#include <vector>

namespace sovrisk {

struct SearchOptions {
    std::int64_t min_seg = 1;  // minimum segment length, in transition slots
    // Two-stage search: coarse grid first, then local refinement. Kept
    // for parity with low-budget setups; the exact DP is the default.
    bool two_stage = false;
    std::int64_t stride = 21;
};

// Maximum-likelihood break positions for exactly k breaks, found by
// dynamic programming over the prefix count tables (exact search). Among
// equally likely solutions the lexicographically smallest tau vector is
// returned.
std::vector<std::int64_t> find_changepoints(const TransitionCounts& counts, int k,
                                            const SearchOptions& opts = {});
std::vector<std::int64_t> find_changepoints(const RatingPanel& panel, int k,
                                            std::int64_t min_seg);

// Sum of per-segment log-likelihoods for the segmentation given by taus
// (taus may be empty: pooled likelihood).
double segmented_loglik(const TransitionCounts& counts, const std::vector<std::int64_t>& taus);

// Likelihood-ratio statistic: twice the gap between the segmented and
// pooled log-likelihoods. Nonnegative.
double lrt_statistic(const TransitionCounts& counts, const std::vector<std::int64_t>& taus);
double lrt_statistic(const RatingPanel& panel, const std::vector<std::int64_t>& taus);

// Number of free parameters on the observed support: off-diagonal
// transitions with positive probability, summed over segments.
std::int64_t observed_support_params(const TransitionCounts& counts,
                                     const std::vector<std::int64_t>& taus);

// log(s) * param_count - 2 * loglik, natural logarithm.
double bic_score(double loglik, std::int64_t param_count, std::int64_t s);

struct ChangePointFit {
    int k = 0;
    std::vector<std::int64_t> taus;
    double total_loglik = 0.0;
    std::int64_t param_count = 0;
    double bic = 0.0;
};

struct ModelSelection {
    ChangePointFit best;
    std::vector<ChangePointFit> by_k;  // index = k
};

// Fits k = 0..k_max and returns the BIC-minimizing segmentation (ties go
// to the smaller k). k values whose segment constraints cannot be met
// are not considered.
ModelSelection model_select(const RatingPanel& panel, int k_max, const SearchOptions& opts = {});

struct BootstrapOptions {
    int replicates = 199;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    int threads = 1;
};

struct BootstrapResult {
    double critical_value = 0.0;
    std::vector<double> lambdas;  // in replicate order

    // Bootstrap p-value of an observed statistic: (1 + #{lambda* >= obs})
    // over (replicates + 1).
    double p_value(double observed) const;
};

// Simulates `replicates` panels from the pooled MLE matrix (same country
// count, length and initial states), re-runs the break search plus LRT on
// each, and returns the empirical (1 - alpha) quantile (nearest rank).
// Replicate r draws from stream seed + r; results are reduced in
// replicate order, so the outcome does not depend on the thread count.
BootstrapResult bootstrap_critical(const RatingPanel& panel, int k, const SearchOptions& opts,
                                   const BootstrapOptions& boot);

struct LrtResult {
    double lambda = 0.0;
    double critical_value = 0.0;
    double p_value = 1.0;
    std::int64_t df = 0;  // D(D-1) * k
};

}  // namespace sovrisk
