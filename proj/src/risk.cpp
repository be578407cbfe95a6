#include "sovrisk/risk.hpp"

#include "sovrisk/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sovrisk {

ShareVector ShareVector::from_spreads(const std::vector<double>& spreads) {
    if (spreads.empty()) throw std::invalid_argument("shares_from_spreads: empty vector");
    for (double s : spreads)
        if (s < 0.0) throw std::invalid_argument("shares_from_spreads: negative spread");
    const double total = permutation_invariant_sum(spreads);
    if (total <= 0.0)
        throw std::invalid_argument("shares_from_spreads: all spreads are zero, shares undefined");
    ShareVector v;
    v.shares.reserve(spreads.size());
    for (double s : spreads) v.shares.push_back(s / total);
    return v;
}

double theil_index(const ShareVector& sv) {
    if (sv.shares.empty()) throw std::invalid_argument("theil_index: empty share vector");
    const double n = static_cast<double>(sv.shares.size());
    std::vector<double> terms;
    terms.reserve(sv.shares.size());
    for (double p : sv.shares) {
        if (p < 0.0) throw std::invalid_argument("theil_index: negative share");
        if (p > 0.0) terms.push_back(p * std::log(n * p));
    }
    const double value = permutation_invariant_sum(std::move(terms));
    return std::clamp(value, 0.0, std::log(n));
}

TheilDecomposition theil_decompose(const std::vector<double>& spreads,
                                   const std::vector<int>& ranks, int dim) {
    if (spreads.size() != ranks.size())
        throw std::invalid_argument("theil_decompose: spreads/ranks length mismatch");
    const ShareVector sv = ShareVector::from_spreads(spreads);
    const double n = static_cast<double>(spreads.size());

    TheilDecomposition dec;
    dec.total = theil_index(sv);
    dec.class_share.assign(static_cast<std::size_t>(dim), 0.0);
    dec.within.assign(static_cast<std::size_t>(dim), 0.0);

    std::vector<std::vector<double>> class_shares(static_cast<std::size_t>(dim));
    for (std::size_t c = 0; c < ranks.size(); ++c) {
        const int x = ranks[c];
        if (x < 1 || x > dim) throw std::invalid_argument("theil_decompose: rank outside 1..D");
        class_shares[static_cast<std::size_t>(x - 1)].push_back(sv.shares[c]);
        dec.class_share[static_cast<std::size_t>(x - 1)] += sv.shares[c];
    }

    for (int x = 0; x < dim; ++x) {
        const double q = dec.class_share[static_cast<std::size_t>(x)];
        const auto& members = class_shares[static_cast<std::size_t>(x)];
        if (members.empty() || q <= 0.0) continue;
        const double n_x = static_cast<double>(members.size());
        // between-class contribution compares q_x with the class size share
        dec.inter += q * std::log(q * n / n_x);
        double t_x = 0.0;
        for (double p : members)
            if (p > 0.0) t_x += (p / q) * std::log(n_x * p / q);
        dec.within[static_cast<std::size_t>(x)] = std::clamp(t_x, 0.0, std::log(n_x));
        dec.intra += q * dec.within[static_cast<std::size_t>(x)];
    }
    return dec;
}

RewardModel RewardModel::make(SegmentedChainModel chain, std::vector<double> class_means,
                              std::vector<int> initial_ranks) {
    chain.validate();
    const int d = chain.dim();
    if (static_cast<int>(class_means.size()) != d)
        throw std::invalid_argument("reward model: class_means must have one entry per rank");
    for (double m : class_means)
        if (m < 0.0) throw std::invalid_argument("reward model: negative class mean");
    RewardModel model;
    model.initial_counts.assign(static_cast<std::size_t>(d), 0);
    for (int r : initial_ranks) {
        if (r < 1 || r > d) throw std::invalid_argument("reward model: initial rank outside 1..D");
        ++model.initial_counts[static_cast<std::size_t>(r - 1)];
    }
    model.chain = std::move(chain);
    model.class_means = std::move(class_means);
    model.initial_ranks = std::move(initial_ranks);
    return model;
}

Eigen::MatrixXd expected_total_spread_table(const RewardModel& model, std::int64_t t_max) {
    if (t_max < 0) throw std::invalid_argument("expected_total_spread: negative horizon");
    const int d = model.chain.dim();
    const Eigen::Map<const Eigen::VectorXd> means(model.class_means.data(), d);
    Eigen::MatrixXd table = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(t_max) + 1, d);
    ChainPropagator prop(model.chain);
    Eigen::RowVectorXd v = Eigen::RowVectorXd::Zero(d);
    for (std::int64_t t = 1; t <= t_max; ++t) {
        prop.advance();
        v += (prop.current() * means).transpose();  // increment per starting rank
        table.row(static_cast<Eigen::Index>(t)) = v;
    }
    return table;
}

std::vector<double> expected_total_spread_path(const RewardModel& model, int rank,
                                               std::int64_t t_max) {
    const int d = model.chain.dim();
    if (rank < 1 || rank > d)
        throw std::invalid_argument("expected_total_spread: rank outside 1..D");
    const Eigen::MatrixXd table = expected_total_spread_table(model, t_max);
    std::vector<double> path(static_cast<std::size_t>(t_max) + 1);
    for (std::int64_t t = 0; t <= t_max; ++t)
        path[static_cast<std::size_t>(t)] = table(static_cast<Eigen::Index>(t), rank - 1);
    return path;
}

double expected_total_spread_by_rank(const RewardModel& model, int rank, std::int64_t t) {
    return expected_total_spread_path(model, rank, t).back();
}

double expected_total_spread(const RewardModel& model, std::int64_t t) {
    const Eigen::MatrixXd table = expected_total_spread_table(model, t);
    double total = 0.0;
    for (int j = 0; j < model.chain.dim(); ++j)
        total += static_cast<double>(model.initial_counts[static_cast<std::size_t>(j)]) *
                 table(static_cast<Eigen::Index>(t), j);
    return total;
}

Eigen::MatrixXd independent_second_moments(const std::vector<double>& class_means) {
    const Eigen::Map<const Eigen::VectorXd> m(class_means.data(),
                                              static_cast<Eigen::Index>(class_means.size()));
    return m * m.transpose();
}

PairMomentPaths pair_moment_paths(const RewardModel& model,
                                  const Eigen::MatrixXd& second_moments, int country_a,
                                  int country_b, std::int64_t t_max) {
    if (t_max < 0) throw std::invalid_argument("product_moment: negative horizon");
    if (country_a == country_b)
        throw std::invalid_argument("product_moment: defined for two distinct countries");
    const auto n = static_cast<int>(model.initial_ranks.size());
    if (country_a < 0 || country_b < 0 || country_a >= n || country_b >= n)
        throw std::invalid_argument("product_moment: country index out of range");
    const int d = model.chain.dim();
    if (second_moments.rows() != d || second_moments.cols() != d)
        throw std::invalid_argument("product_moment: second-moment table must be D x D");

    const int rank_a = model.initial_ranks[static_cast<std::size_t>(country_a)];
    const int rank_b = model.initial_ranks[static_cast<std::size_t>(country_b)];
    const Eigen::Map<const Eigen::VectorXd> means(model.class_means.data(), d);

    PairMomentPaths paths;
    paths.v_a.assign(static_cast<std::size_t>(t_max) + 1, 0.0);
    paths.v_b.assign(static_cast<std::size_t>(t_max) + 1, 0.0);
    paths.v_ab.assign(static_cast<std::size_t>(t_max) + 1, 0.0);
    ChainPropagator prop(model.chain);
    double v_a = 0.0, v_b = 0.0, v_ab = 0.0;
    for (std::int64_t t = 1; t <= t_max; ++t) {
        prop.advance();
        const Eigen::RowVectorXd row_a = prop.current().row(rank_a - 1);
        const Eigen::RowVectorXd row_b = prop.current().row(rank_b - 1);
        const double inc_a = row_a * means;
        const double inc_b = row_b * means;
        const double cross = row_a * second_moments * row_b.transpose();
        v_ab = v_ab + v_a * inc_b + v_b * inc_a + cross;
        v_a += inc_a;
        v_b += inc_b;
        paths.v_a[static_cast<std::size_t>(t)] = v_a;
        paths.v_b[static_cast<std::size_t>(t)] = v_b;
        paths.v_ab[static_cast<std::size_t>(t)] = v_ab;
    }
    return paths;
}

std::vector<double> product_moment_path(const RewardModel& model,
                                        const Eigen::MatrixXd& second_moments, int country_a,
                                        int country_b, std::int64_t t_max) {
    return pair_moment_paths(model, second_moments, country_a, country_b, t_max).v_ab;
}

double product_moment(const RewardModel& model, const Eigen::MatrixXd& second_moments,
                      int country_a, int country_b, std::int64_t t) {
    return product_moment_path(model, second_moments, country_a, country_b, t).back();
}

double total_spread_covariance(const RewardModel& model, const Eigen::MatrixXd& second_moments,
                               int country_a, int country_b, std::int64_t t) {
    const PairMomentPaths paths =
        pair_moment_paths(model, second_moments, country_a, country_b, t);
    return paths.v_ab.back() - paths.v_a.back() * paths.v_b.back();
}

CovarianceResult spread_correlation(const RewardModel& model,
                                    const Eigen::MatrixXd& second_moments, int country_a,
                                    int country_b, std::int64_t t, double sd_a, double sd_b) {
    CovarianceResult res;
    res.sigma = total_spread_covariance(model, second_moments, country_a, country_b, t);
    if (sd_a > 0.0 && sd_b > 0.0) {
        res.rho = res.sigma / (sd_a * sd_b);
        res.rho_defined = true;
    }
    return res;
}

}  // namespace sovrisk
