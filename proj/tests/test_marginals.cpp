#include <catch2/catch_amalgamated.hpp>

#include "sovrisk/marginals.hpp"
#include "sovrisk/stats.hpp"

#include <algorithm>
#include <random>

using namespace sovrisk;
using Catch::Approx;

namespace {

ClassMarginal make_marginal(int rank, std::vector<double> samples) {
    std::sort(samples.begin(), samples.end());
    return ClassMarginal{rank, std::move(samples)};
}

// Exact integral of the empirical survival function over [0, max sample]
// for nonnegative sorted samples; serves as the independent oracle for
// expected_class_spread.
double survival_integral(const std::vector<double>& sorted) {
    const double n = static_cast<double>(sorted.size());
    double integral = 0.0;
    double prev = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double survival = 1.0 - static_cast<double>(i) / n;
        integral += (sorted[i] - prev) * survival;
        prev = sorted[i];
    }
    return integral;
}

}  // namespace

TEST_CASE("pooling spreads by rating class") {
    RatingPanel ratings;
    ratings.dim = 4;
    ratings.countries = {"A", "B"};
    ratings.dates = {0, 1};
    ratings.ranks.resize(2, 2);
    ratings.ranks << 3, 3, 3, 3;
    SpreadPanel spreads;
    spreads.countries = ratings.countries;
    spreads.dates = ratings.dates;
    spreads.spreads.resize(2, 2);
    spreads.spreads << 0.1, 0.2, 0.3, 0.4;

    auto marginals = build_marginals(ratings, spreads);
    REQUIRE(marginals.size() == 4);
    CHECK(marginals[2].size() == 4);
    CHECK(marginals[0].empty());
    CHECK(marginals[3].empty());

    // upgraded country splits its observations between two classes
    ratings.ranks << 3, 2, 3, 3;
    marginals = build_marginals(ratings, spreads);
    CHECK(marginals[1].size() == 1);
    CHECK(marginals[1].samples[0] == 0.2);
    CHECK(marginals[2].size() == 3);

    std::size_t pooled = 0;
    for (const auto& m : marginals) pooled += m.size();
    CHECK(pooled == 4);  // N * T
}

TEST_CASE("ecdf and generalized inverse") {
    const auto m = make_marginal(1, {1.0, 2.0, 3.0});
    CHECK(ecdf(m, 2.0) == Approx(2.0 / 3.0));
    CHECK(ecdf(m, 0.5) == 0.0);
    CHECK(ecdf(m, 3.0) == 1.0);
    CHECK(ecdf(m, 99.0) == 1.0);

    CHECK(quantile(m, 0.0) == 1.0);
    CHECK(quantile(m, 1.0) == 3.0);

    const auto m4 = make_marginal(1, {1.0, 2.0, 3.0, 4.0});
    CHECK(quantile(m4, 0.5) == 2.0);

    const ClassMarginal empty{1, {}};
    CHECK_THROWS_AS(ecdf(empty, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(quantile(empty, 0.5), std::invalid_argument);
}

TEST_CASE("Galois inequalities of the ecdf/quantile pair") {
    std::mt19937_64 gen(13);
    std::uniform_real_distribution<double> val(0.0, 10.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> samples(57);
    for (auto& s : samples) s = val(gen);
    std::sort(samples.begin(), samples.end());
    const ClassMarginal m{2, samples};

    for (double y : samples) CHECK(quantile(m, ecdf(m, y)) >= y);
    for (int i = 0; i < 200; ++i) {
        const double u = unif(gen);
        CHECK(ecdf(m, quantile(m, u)) >= u);
    }
    // monotone, right-continuous, reaches 1
    double prev = 0.0;
    for (double y = -1.0; y < 11.0; y += 0.05) {
        const double f = ecdf(m, y);
        CHECK(f >= prev);
        prev = f;
    }
    CHECK(ecdf(m, samples.back()) == 1.0);
}

TEST_CASE("expected class spread equals the survival integral") {
    CHECK(expected_class_spread(make_marginal(1, {5.0})) == 5.0);
    CHECK(expected_class_spread(make_marginal(1, {2.0, 4.0, 6.0})) == Approx(4.0));

    std::mt19937_64 gen(19);
    std::exponential_distribution<double> expo(0.7);
    std::vector<double> samples(301);
    for (auto& s : samples) s = expo(gen);
    std::sort(samples.begin(), samples.end());
    const ClassMarginal m{3, samples};
    CHECK(expected_class_spread(m) == Approx(survival_integral(samples)).margin(1e-9));

    CHECK_THROWS_AS(expected_class_spread(ClassMarginal{1, {}}), std::invalid_argument);
}

TEST_CASE("marginal stats ordering on synthetic class data") {
    // class means increase with rank by construction
    std::mt19937_64 gen(23);
    std::vector<ClassMarginal> marginals;
    double prev_mean = -1.0;
    for (int rank = 1; rank <= 5; ++rank) {
        std::uniform_real_distribution<double> val(rank * 1.0, rank * 1.0 + 0.5);
        std::vector<double> samples(400);
        for (auto& s : samples) s = val(gen);
        std::sort(samples.begin(), samples.end());
        marginals.push_back(ClassMarginal{rank, samples});
        const MarginalStats st = marginal_stats(marginals.back());
        CHECK(st.mean > prev_mean);
        CHECK(st.st_dev > 0.0);
        prev_mean = st.mean;
    }
}

TEST_CASE("one-way anova") {
    SECTION("hand-computed example") {
        const std::vector<ClassMarginal> groups{make_marginal(1, {1, 2, 3}),
                                                make_marginal(2, {2, 3, 4}),
                                                make_marginal(3, {3, 4, 5})};
        const AnovaResult r = anova_f(groups);
        CHECK(r.f == Approx(3.0));  // MSB = 3, MSW = 1
        CHECK(r.df_between == 2);
        CHECK(r.df_within == 6);
        CHECK(r.p_value == Approx(0.125).epsilon(1e-9));
    }
    SECTION("equal means give F = 0") {
        const std::vector<ClassMarginal> groups{make_marginal(1, {1, 2, 3}),
                                                make_marginal(2, {0, 2, 4}),
                                                make_marginal(3, {2, 2, 2, 2})};
        CHECK(anova_f(groups).f == 0.0);
    }
    SECTION("identical constant groups with different means") {
        const std::vector<ClassMarginal> groups{make_marginal(1, {1, 1}),
                                                make_marginal(2, {2, 2})};
        const AnovaResult r = anova_f(groups);
        CHECK(std::isinf(r.f));
        CHECK(r.p_value == 0.0);
    }
    SECTION("empty classes are skipped") {
        const std::vector<ClassMarginal> groups{make_marginal(1, {1, 2, 3}), ClassMarginal{2, {}},
                                                make_marginal(3, {4, 5, 6})};
        CHECK_NOTHROW(anova_f(groups));
    }
    SECTION("fewer than two groups is an error") {
        CHECK_THROWS_AS(anova_f({make_marginal(1, {1, 2})}), std::invalid_argument);
    }
}

TEST_CASE("country series correlation") {
    SpreadPanel s;
    s.countries = {"A", "B", "C"};
    s.dates = {0, 1, 2, 3};
    s.spreads.resize(3, 4);
    s.spreads << 1, 2, 3, 4,    // A
        8, 6, 4, 2,             // B = falling
        5, 5, 5, 5;             // C constant
    const CorrelationResult r = series_correlation(s);
    CHECK(r.corr(0, 0) == 1.0);
    CHECK(r.corr(0, 1) == Approx(-1.0));
    CHECK(r.corr(1, 0) == r.corr(0, 1));
    CHECK(r.corr(0, 2) == 0.0);  // constant series zeroed by convention
    CHECK(r.corr(2, 2) == 1.0);
    REQUIRE(r.zero_variance.size() == 1);
    CHECK(r.zero_variance[0] == 2);

    // near-proportional series approach correlation 1
    SpreadPanel t;
    t.countries = {"A", "B"};
    t.dates = {0, 1, 2, 3, 4};
    t.spreads.resize(2, 5);
    t.spreads << 1, 2, 3, 4, 5, 2.0001, 4.0002, 5.9999, 8.00005, 10.0001;
    CHECK(series_correlation(t).corr(0, 1) == Approx(1.0).margin(1e-6));
}
