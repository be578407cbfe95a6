#include <catch2/catch_amalgamated.hpp>

#include "sovrisk/risk.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace sovrisk;
using Catch::Approx;

namespace {

Eigen::MatrixXd random_stochastic(int d, std::mt19937_64& gen) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    Eigen::MatrixXd p(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) p(i, j) = u(gen);
        p.row(i) /= p.row(i).sum();
    }
    return p;
}

}  // namespace

TEST_CASE("shares from spreads") {
    const auto u = ShareVector::from_spreads({1, 1, 1, 1});
    for (double s : u.shares) CHECK(s == Approx(0.25));

    const auto degenerate = ShareVector::from_spreads({0.0, 5.0});
    CHECK(degenerate.shares[0] == 0.0);
    CHECK(degenerate.shares[1] == 1.0);

    const auto table4 = ShareVector::from_spreads({2, 4, 5, 6, 3});
    CHECK(table4.shares[0] == Approx(0.10));
    CHECK(table4.shares[1] == Approx(0.20));
    CHECK(table4.shares[2] == Approx(0.25));
    CHECK(table4.shares[3] == Approx(0.30));
    CHECK(table4.shares[4] == Approx(0.15));

    CHECK_THROWS_AS(ShareVector::from_spreads({0.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(ShareVector::from_spreads({1.0, -0.1}), std::invalid_argument);
}

TEST_CASE("theil index on the published toy spreads") {
    // values stated alongside the five-agent example
    CHECK(theil_index(ShareVector::from_spreads({2, 4, 5, 6, 3})) ==
          Approx(0.065).margin(5e-4));
    CHECK(theil_index(ShareVector::from_spreads({32, 34, 35, 36, 33})) ==
          Approx(0.0009).margin(1e-4));
    CHECK(theil_index(ShareVector::from_spreads({5, 7, 8, 9, 6})) == Approx(0.02).margin(1e-3));
    // same quantities against an independently computed reference
    CHECK(theil_index(ShareVector::from_spreads({2, 4, 5, 6, 3})) ==
          Approx(0.064958391337240087).epsilon(1e-12));
    CHECK(theil_index(ShareVector::from_spreads({32, 34, 35, 36, 33})) ==
          Approx(0.00086547651021519605).epsilon(1e-10));
    CHECK(theil_index(ShareVector::from_spreads({5, 7, 8, 9, 6})) ==
          Approx(0.020651878098706278).epsilon(1e-12));
}

TEST_CASE("theil bounds and degenerate cases") {
    for (int n : {2, 3, 5, 24}) {
        const ShareVector uniform{std::vector<double>(static_cast<std::size_t>(n),
                                                      1.0 / static_cast<double>(n))};
        CHECK(theil_index(uniform) == 0.0);

        std::vector<double> dirac(static_cast<std::size_t>(n), 0.0);
        dirac[0] = 1.0;
        CHECK(theil_index(ShareVector{dirac}) == Approx(std::log(n)).epsilon(1e-15));
    }
    CHECK_THROWS_AS(theil_index(ShareVector{{-0.1, 1.1}}), std::invalid_argument);
}

TEST_CASE("theil is exactly permutation invariant and scale invariant to 1e-12") {
    std::mt19937_64 gen(41);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> spreads(17);
        for (auto& s : spreads) s = u(gen);
        spreads[static_cast<std::size_t>(gen() % spreads.size())] = 0.0;  // zeros allowed
        const ShareVector sv = ShareVector::from_spreads(spreads);
        const double base = theil_index(sv);
        CHECK(base >= 0.0);
        CHECK(base <= std::log(static_cast<double>(spreads.size())));

        std::vector<double> permuted = spreads;
        std::shuffle(permuted.begin(), permuted.end(), gen);
        CHECK(theil_index(ShareVector::from_spreads(permuted)) == base);  // bitwise

        std::vector<double> scaled = spreads;
        for (auto& s : scaled) s *= 137.5;
        CHECK(theil_index(ShareVector::from_spreads(scaled)) == Approx(base).margin(1e-12));
    }
}

TEST_CASE("decomposition edge cases") {
    SECTION("all countries in one class: inter vanishes") {
        const std::vector<double> spreads{1, 2, 3, 4};
        const std::vector<int> ranks{3, 3, 3, 3};
        const TheilDecomposition dec = theil_decompose(spreads, ranks, 5);
        CHECK(dec.inter == Approx(0.0).margin(1e-15));
        CHECK(dec.intra == Approx(dec.total).margin(1e-12));
        CHECK(dec.class_share[2] == Approx(1.0));
    }
    SECTION("one country per class: intra vanishes") {
        const std::vector<double> spreads{1, 2, 3, 4};
        const std::vector<int> ranks{1, 2, 3, 4};
        const TheilDecomposition dec = theil_decompose(spreads, ranks, 4);
        CHECK(dec.intra == Approx(0.0).margin(1e-15));
        CHECK(dec.inter == Approx(dec.total).margin(1e-12));
    }
}

TEST_CASE("decomposition identity on random instances") {
    std::mt19937_64 gen(43);
    std::uniform_real_distribution<double> u(0.01, 5.0);
    std::uniform_int_distribution<int> rank(1, 6);
    for (int rep = 0; rep < 1000; ++rep) {
        std::vector<double> spreads(12);
        std::vector<int> ranks(12);
        for (std::size_t i = 0; i < spreads.size(); ++i) {
            spreads[i] = u(gen);
            ranks[i] = rank(gen);
        }
        const TheilDecomposition dec = theil_decompose(spreads, ranks, 6);
        CHECK(dec.total == Approx(dec.inter + dec.intra).margin(1e-12));
        double q_sum = 0.0;
        for (double q : dec.class_share) q_sum += q;
        CHECK(q_sum == Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("expected total spread recursion") {
    SECTION("horizon zero is an empty sum") {
        const auto model = RewardModel::make(
            SegmentedChainModel::single(Eigen::MatrixXd::Identity(2, 2)), {1.0, 3.0}, {1, 2});
        CHECK(expected_total_spread_by_rank(model, 1, 0) == 0.0);
        CHECK(expected_total_spread(model, 0) == 0.0);
    }
    SECTION("identity chain accumulates its class mean linearly") {
        const auto model = RewardModel::make(
            SegmentedChainModel::single(Eigen::MatrixXd::Identity(3, 3)), {0.5, 1.0, 2.0},
            {1, 2, 3});
        for (std::int64_t t : {1, 7, 100}) {
            CHECK(expected_total_spread_by_rank(model, 1, t) == Approx(0.5 * t));
            CHECK(expected_total_spread_by_rank(model, 3, t) == Approx(2.0 * t));
        }
    }
    SECTION("symmetric two-state example") {
        Eigen::MatrixXd half(2, 2);
        half << 0.5, 0.5, 0.5, 0.5;
        const auto model =
            RewardModel::make(SegmentedChainModel::single(half), {1.0, 3.0}, {1, 2});
        CHECK(expected_total_spread_by_rank(model, 1, 1) == Approx(2.0));
        CHECK(expected_total_spread_by_rank(model, 1, 2) == Approx(4.0));
        CHECK(expected_total_spread_by_rank(model, 1, 37) == Approx(2.0 * 37));
        // aggregate with one country per rank
        CHECK(expected_total_spread(model, 5) == Approx(4.0 * 5));
    }
    SECTION("monotone in t and linear in the initial allocation") {
        std::mt19937_64 gen(47);
        const auto p = random_stochastic(3, gen);
        const auto one = RewardModel::make(SegmentedChainModel::single(p), {0.2, 0.9, 2.2},
                                           {2});
        const auto many = RewardModel::make(SegmentedChainModel::single(p), {0.2, 0.9, 2.2},
                                            {2, 2, 2, 2});
        double prev = 0.0;
        for (std::int64_t t = 1; t <= 50; ++t) {
            const double v = expected_total_spread_by_rank(one, 2, t);
            CHECK(v >= prev);
            prev = v;
        }
        CHECK(expected_total_spread(many, 20) == Approx(4.0 * expected_total_spread(one, 20)));
    }
    SECTION("rank bounds are checked") {
        const auto model = RewardModel::make(
            SegmentedChainModel::single(Eigen::MatrixXd::Identity(2, 2)), {1.0, 1.0}, {1});
        CHECK_THROWS_AS(expected_total_spread_by_rank(model, 0, 3), std::invalid_argument);
        CHECK_THROWS_AS(expected_total_spread_by_rank(model, 3, 3), std::invalid_argument);
    }
}

TEST_CASE("recursion agrees with piecewise propagation across a break") {
    // direct sum over piecewise_propagate rows is the slow-but-direct oracle
    SegmentedChainModel model;
    std::mt19937_64 gen(53);
    model.taus = {4};
    model.matrices = {random_stochastic(3, gen), random_stochastic(3, gen)};
    const std::vector<double> means{0.3, 1.1, 2.7};
    const auto reward = RewardModel::make(model, means, {1, 2, 3});
    const Eigen::Map<const Eigen::VectorXd> mv(means.data(), 3);

    for (int rank = 1; rank <= 3; ++rank) {
        double direct = 0.0;
        for (std::int64_t s = 1; s <= 12; ++s)
            direct += piecewise_propagate(model, rank, s) * mv;
        CHECK(expected_total_spread_by_rank(reward, rank, 12) == Approx(direct).epsilon(1e-12));
    }
}

TEST_CASE("product moment recursion") {
    SECTION("starts at zero and rejects a country paired with itself") {
        Eigen::MatrixXd half(2, 2);
        half << 0.5, 0.5, 0.5, 0.5;
        const auto model =
            RewardModel::make(SegmentedChainModel::single(half), {1.0, 3.0}, {1, 2});
        const auto smm = independent_second_moments(model.class_means);
        CHECK(product_moment(model, smm, 0, 1, 0) == 0.0);
        CHECK_THROWS_AS(product_moment(model, smm, 1, 1, 4), std::invalid_argument);
    }
    SECTION("independence telescopes to the product of the means") {
        std::mt19937_64 gen(59);
        const auto p = random_stochastic(4, gen);
        const auto model = RewardModel::make(SegmentedChainModel::single(p),
                                             {0.05, 0.2, 0.6, 1.4}, {1, 3, 4, 2});
        const auto smm = independent_second_moments(model.class_means);
        const auto paths = pair_moment_paths(model, smm, 0, 2, 200);
        for (std::int64_t t = 0; t <= 200; ++t) {
            const double vab = paths.v_ab[static_cast<std::size_t>(t)];
            const double va = paths.v_a[static_cast<std::size_t>(t)];
            const double vb = paths.v_b[static_cast<std::size_t>(t)];
            CHECK(vab == Approx(va * vb).margin(1e-10));
        }
    }
    SECTION("identity chains with point spreads give (t ma)(t mb) for any copula") {
        const auto model = RewardModel::make(
            SegmentedChainModel::single(Eigen::MatrixXd::Identity(2, 2)), {1.5, 4.0}, {1, 2});
        // degenerate marginals make E[Wa Wb] = ma mb whatever the dependence
        Eigen::MatrixXd smm(2, 2);
        smm << 1.5 * 1.5, 1.5 * 4.0, 4.0 * 1.5, 4.0 * 4.0;
        for (std::int64_t t : {1, 5, 40})
            CHECK(product_moment(model, smm, 0, 1, t) ==
                  Approx((1.5 * t) * (4.0 * t)).epsilon(1e-12));
    }
}

TEST_CASE("covariance of total spreads") {
    std::mt19937_64 gen(61);
    const auto p = random_stochastic(3, gen);
    const auto model =
        RewardModel::make(SegmentedChainModel::single(p), {0.03, 0.07, 0.11}, {1, 2, 3});

    SECTION("independence gives zero covariance for all horizons") {
        const auto smm = independent_second_moments(model.class_means);
        for (std::int64_t t : {1, 10, 100, 200})
            CHECK(total_spread_covariance(model, smm, 0, 1, t) == Approx(0.0).margin(1e-10));
    }
    SECTION("symmetry in the pair") {
        Eigen::MatrixXd smm = independent_second_moments(model.class_means);
        smm.array() *= 1.25;  // some positive dependence
        const double ab = total_spread_covariance(model, smm, 0, 2, 37);
        const double ba = total_spread_covariance(model, smm.transpose(), 2, 0, 37);
        CHECK(ab == Approx(ba).epsilon(1e-12));
        CHECK(ab > 0.0);
    }
    SECTION("correlation handles zero variance by convention") {
        const auto smm = independent_second_moments(model.class_means);
        const CovarianceResult r = spread_correlation(model, smm, 0, 1, 10, 0.0, 1.0);
        CHECK(r.rho == 0.0);
        CHECK_FALSE(r.rho_defined);
        const CovarianceResult ok = spread_correlation(model, smm, 0, 1, 10, 1.0, 2.0);
        CHECK(ok.rho_defined);
        CHECK(ok.rho == Approx(ok.sigma / 2.0));
    }
}
