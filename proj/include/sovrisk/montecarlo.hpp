#pragma once

#include "sovrisk/copula.hpp"
#include "sovrisk/marginals.hpp"
#include "sovrisk/markov.hpp"
#include "sovrisk/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace sovrisk {

struct SimulationConfig {
    std::int64_t horizon_steps = 1095;  // three years, daily calendar
    int iterations = 200;
    std::uint64_t seed = 0;
    // Optional per-country multiplicative drift of simulated spreads; the
    // rates come from the observed series' mean relative variation.
    bool drift_adjustment = false;
    std::vector<double> drift_rates;
    std::int64_t cov_time = -1;  // snapshot for the covariance matrix; -1 = horizon/2
    int threads = 1;             // 0 = hardware concurrency
    bool keep_traces = false;
};

struct SimulationResult {
    std::int64_t horizon = 0;
    int iterations = 0;
    std::int64_t cov_time = 0;

    // Per step 0..horizon, reduced over iterations. Steps on which every
    // country drew a zero spread are skipped (counted below); the
    // statistics are taken over the remaining iterations.
    std::vector<double> mean_dt, q05_dt, q95_dt;
    std::vector<double> mean_inter, mean_intra;
    std::vector<int> skipped;

    // Cumulative spreads over steps 1..horizon, per country.
    std::vector<double> mean_total_spread;
    std::vector<double> sd_total_spread;

    // Covariance/correlation of the cumulative spreads at cov_time,
    // estimated across iterations.
    Eigen::MatrixXd cum_spread_cov;
    Eigen::MatrixXd cum_spread_corr;

    bool has_traces = false;
    Eigen::MatrixXd dt_traces, inter_traces, intra_traces;  // iterations x (horizon+1)
};

// One rating path: path[0] = initial, then the inverse-CDF draw on the
// row of whichever segment governs each step.
std::vector<int> simulate_rating_path(const SegmentedChainModel& model, int initial,
                                      std::int64_t horizon, Rng& rng);

// Joint rating + spread simulation. Iteration i draws from the stream
// seed ^ i and iterations are reduced in index order, so the result is
// bit-identical for any thread count.
SimulationResult run_simulation(const SegmentedChainModel& chain,
                                const std::vector<ClassMarginal>& marginals,
                                const CopulaModel& copula, const std::vector<int>& initial_ranks,
                                const SimulationConfig& cfg);

// E[DT(t)] series of a finished run.
std::vector<double> expected_dynamic_theil(const SimulationResult& result);

// Mean / standard deviation of one country's cumulative spread at time t,
// simulated with the same path engine and seed policy. Used to normalize
// the closed-form covariance into a correlation.
struct TotalSpreadMoments {
    double mean = 0.0;
    double sd = 0.0;
};
TotalSpreadMoments simulate_total_spread_moments(const SegmentedChainModel& chain,
                                                 const std::vector<ClassMarginal>& marginals,
                                                 int initial_rank, std::int64_t t, int iterations,
                                                 std::uint64_t seed);

// Mean relative one-step variation of each country's observed spreads
// (steps with a zero current spread are skipped).
std::vector<double> estimate_drift_rates(const SpreadPanel& spreads);

}  // namespace sovrisk
