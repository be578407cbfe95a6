#include "sovrisk/montecarlo.hpp"

#include "sovrisk/parallel.hpp"
#include "sovrisk/risk.hpp"
#include "sovrisk/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sovrisk {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct StepStats {
    double mean = kNaN;
    double q05 = kNaN;
    double q95 = kNaN;
    int skipped = 0;
};

StepStats reduce_step(const Eigen::MatrixXd& traces, Eigen::Index t) {
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(traces.rows()));
    int skipped = 0;
    for (Eigen::Index i = 0; i < traces.rows(); ++i) {
        const double v = traces(i, t);
        if (std::isnan(v))
            ++skipped;
        else
            vals.push_back(v);
    }
    StepStats st;
    st.skipped = skipped;
    if (vals.empty()) return st;
    st.mean = mean_of(vals);
    std::sort(vals.begin(), vals.end());
    st.q05 = nearest_rank_quantile(vals, 0.05);
    st.q95 = nearest_rank_quantile(vals, 0.95);
    return st;
}

double mean_over_valid(const Eigen::MatrixXd& traces, Eigen::Index t) {
    double sum = 0.0;
    std::int64_t n = 0;
    for (Eigen::Index i = 0; i < traces.rows(); ++i) {
        const double v = traces(i, t);
        if (!std::isnan(v)) {
            sum += v;
            ++n;
        }
    }
    return n > 0 ? sum / static_cast<double>(n) : kNaN;
}

}  // namespace

std::vector<int> simulate_rating_path(const SegmentedChainModel& model, int initial,
                                      std::int64_t horizon, Rng& rng) {
    if (horizon < 0) throw std::invalid_argument("simulate_rating_path: negative horizon");
    const int d = model.dim();
    if (initial < 1 || initial > d)
        throw std::invalid_argument("simulate_rating_path: initial rank outside 1..D");
    std::vector<int> path(static_cast<std::size_t>(horizon) + 1);
    path[0] = initial;
    int state = initial;
    for (std::int64_t t = 0; t < horizon; ++t) {
        const Eigen::MatrixXd& p = model.matrices[model.segment_at(t)];
        state = sample_next_rank(p, state, rng.uniform01());
        path[static_cast<std::size_t>(t + 1)] = state;
    }
    return path;
}

SimulationResult run_simulation(const SegmentedChainModel& chain,
                                const std::vector<ClassMarginal>& marginals,
                                const CopulaModel& copula, const std::vector<int>& initial_ranks,
                                const SimulationConfig& cfg) {
    chain.validate();
    const int d = chain.dim();
    if (static_cast<int>(marginals.size()) != d)
        throw std::invalid_argument("run_simulation: need one marginal per rank");
    const auto n = static_cast<Eigen::Index>(initial_ranks.size());
    if (n == 0) throw std::invalid_argument("run_simulation: no countries");
    if (copula.corr.rows() != n)
        throw std::invalid_argument("run_simulation: copula dimension does not match countries");
    if (cfg.horizon_steps < 1) throw std::invalid_argument("run_simulation: horizon must be >= 1");
    if (cfg.iterations < 1) throw std::invalid_argument("run_simulation: iterations must be >= 1");
    if (cfg.drift_adjustment && static_cast<Eigen::Index>(cfg.drift_rates.size()) != n)
        throw std::invalid_argument("run_simulation: drift_rates must have one entry per country");

    const std::int64_t horizon = cfg.horizon_steps;
    const std::int64_t cov_time =
        (cfg.cov_time >= 0) ? std::min(cfg.cov_time, horizon) : horizon / 2;
    const int iters = cfg.iterations;
    const Eigen::MatrixXd chol = copula_cholesky(copula.corr);

    const auto t_cols = static_cast<Eigen::Index>(horizon) + 1;
    Eigen::MatrixXd dt_traces(iters, t_cols);
    Eigen::MatrixXd inter_traces(iters, t_cols);
    Eigen::MatrixXd intra_traces(iters, t_cols);
    Eigen::MatrixXd cum_at_cov(iters, n);
    Eigen::MatrixXd cum_final(iters, n);

    parallel_for_index(static_cast<std::size_t>(iters), cfg.threads, [&](std::size_t it) {
        Rng rng(iteration_seed(cfg.seed, it));
        const auto row = static_cast<Eigen::Index>(it);

        std::vector<std::vector<int>> paths(static_cast<std::size_t>(n));
        for (Eigen::Index c = 0; c < n; ++c)
            paths[static_cast<std::size_t>(c)] =
                simulate_rating_path(chain, initial_ranks[static_cast<std::size_t>(c)], horizon, rng);

        std::vector<double> cum(static_cast<std::size_t>(n), 0.0);
        std::vector<int> ranks_now(static_cast<std::size_t>(n));
        for (std::int64_t t = 0; t <= horizon; ++t) {
            for (Eigen::Index c = 0; c < n; ++c)
                ranks_now[static_cast<std::size_t>(c)] =
                    paths[static_cast<std::size_t>(c)][static_cast<std::size_t>(t)];
            std::vector<double> spreads = sample_joint_chol(chol, ranks_now, marginals, rng);
            if (cfg.drift_adjustment)
                for (Eigen::Index c = 0; c < n; ++c)
                    spreads[static_cast<std::size_t>(c)] *=
                        std::pow(1.0 + cfg.drift_rates[static_cast<std::size_t>(c)],
                                 static_cast<double>(t));

            const double max_spread = *std::max_element(spreads.begin(), spreads.end());
            const auto col = static_cast<Eigen::Index>(t);
            if (max_spread > 0.0) {
                const TheilDecomposition dec =
                    theil_decompose(spreads, ranks_now, d);
                dt_traces(row, col) = dec.total;
                inter_traces(row, col) = dec.inter;
                intra_traces(row, col) = dec.intra;
            } else {
                // every country at the benchmark: shares undefined, skip
                dt_traces(row, col) = kNaN;
                inter_traces(row, col) = kNaN;
                intra_traces(row, col) = kNaN;
            }

            if (t >= 1)
                for (Eigen::Index c = 0; c < n; ++c)
                    cum[static_cast<std::size_t>(c)] += spreads[static_cast<std::size_t>(c)];
            if (t == cov_time) cum_at_cov.row(row) = Eigen::Map<Eigen::RowVectorXd>(cum.data(), n);
        }
        cum_final.row(row) = Eigen::Map<Eigen::RowVectorXd>(cum.data(), n);
    });

    SimulationResult res;
    res.horizon = horizon;
    res.iterations = iters;
    res.cov_time = cov_time;
    res.mean_dt.resize(static_cast<std::size_t>(t_cols));
    res.q05_dt.resize(static_cast<std::size_t>(t_cols));
    res.q95_dt.resize(static_cast<std::size_t>(t_cols));
    res.mean_inter.resize(static_cast<std::size_t>(t_cols));
    res.mean_intra.resize(static_cast<std::size_t>(t_cols));
    res.skipped.resize(static_cast<std::size_t>(t_cols));
    for (Eigen::Index t = 0; t < t_cols; ++t) {
        const StepStats st = reduce_step(dt_traces, t);
        res.mean_dt[static_cast<std::size_t>(t)] = st.mean;
        res.q05_dt[static_cast<std::size_t>(t)] = st.q05;
        res.q95_dt[static_cast<std::size_t>(t)] = st.q95;
        res.skipped[static_cast<std::size_t>(t)] = st.skipped;
        res.mean_inter[static_cast<std::size_t>(t)] = mean_over_valid(inter_traces, t);
        res.mean_intra[static_cast<std::size_t>(t)] = mean_over_valid(intra_traces, t);
    }

    res.mean_total_spread.resize(static_cast<std::size_t>(n));
    res.sd_total_spread.resize(static_cast<std::size_t>(n));
    for (Eigen::Index c = 0; c < n; ++c) {
        std::vector<double> col(static_cast<std::size_t>(iters));
        for (int i = 0; i < iters; ++i) col[static_cast<std::size_t>(i)] = cum_final(i, c);
        res.mean_total_spread[static_cast<std::size_t>(c)] = mean_of(col);
        res.sd_total_spread[static_cast<std::size_t>(c)] = std::sqrt(variance_of(col));
    }

    res.cum_spread_cov = Eigen::MatrixXd::Zero(n, n);
    res.cum_spread_corr = Eigen::MatrixXd::Identity(n, n);
    if (iters > 1) {
        const Eigen::RowVectorXd means = cum_at_cov.colwise().mean();
        const Eigen::MatrixXd centered = cum_at_cov.rowwise() - means;
        res.cum_spread_cov =
            centered.transpose() * centered / static_cast<double>(iters - 1);
        for (Eigen::Index a = 0; a < n; ++a)
            for (Eigen::Index b = 0; b < n; ++b) {
                if (a == b) continue;
                const double va = res.cum_spread_cov(a, a);
                const double vb = res.cum_spread_cov(b, b);
                res.cum_spread_corr(a, b) =
                    (va > 0.0 && vb > 0.0) ? res.cum_spread_cov(a, b) / std::sqrt(va * vb) : 0.0;
            }
    }

    if (cfg.keep_traces) {
        res.has_traces = true;
        res.dt_traces = std::move(dt_traces);
        res.inter_traces = std::move(inter_traces);
        res.intra_traces = std::move(intra_traces);
    }
    return res;
}

std::vector<double> expected_dynamic_theil(const SimulationResult& result) {
    return result.mean_dt;
}

TotalSpreadMoments simulate_total_spread_moments(const SegmentedChainModel& chain,
                                                 const std::vector<ClassMarginal>& marginals,
                                                 int initial_rank, std::int64_t t, int iterations,
                                                 std::uint64_t seed) {
    if (iterations < 1)
        throw std::invalid_argument("simulate_total_spread_moments: iterations must be >= 1");
    std::vector<double> totals(static_cast<std::size_t>(iterations));
    for (int i = 0; i < iterations; ++i) {
        Rng rng(iteration_seed(seed, static_cast<std::uint64_t>(i)));
        const auto path = simulate_rating_path(chain, initial_rank, t, rng);
        double cum = 0.0;
        for (std::int64_t s = 1; s <= t; ++s) {
            const auto& marginal = marginals[static_cast<std::size_t>(path[static_cast<std::size_t>(s)] - 1)];
            if (marginal.empty())
                throw std::invalid_argument("simulate_total_spread_moments: empty marginal");
            cum += quantile(marginal, norm_cdf(rng.normal()));
        }
        totals[static_cast<std::size_t>(i)] = cum;
    }
    TotalSpreadMoments mo;
    mo.mean = mean_of(totals);
    mo.sd = std::sqrt(variance_of(totals));
    return mo;
}

std::vector<double> estimate_drift_rates(const SpreadPanel& spreads) {
    const auto n = static_cast<Eigen::Index>(spreads.n_countries());
    std::vector<double> rates(static_cast<std::size_t>(n), 0.0);
    for (Eigen::Index c = 0; c < n; ++c) {
        double sum = 0.0;
        std::int64_t count = 0;
        for (std::size_t t = 0; t + 1 < spreads.n_dates(); ++t) {
            const double cur = spreads.spreads(c, static_cast<Eigen::Index>(t));
            if (cur <= 0.0) continue;
            const double next = spreads.spreads(c, static_cast<Eigen::Index>(t + 1));
            sum += (next - cur) / cur;
            ++count;
        }
        if (count > 0) rates[static_cast<std::size_t>(c)] = sum / static_cast<double>(count);
    }
    return rates;
}

}  // namespace sovrisk
