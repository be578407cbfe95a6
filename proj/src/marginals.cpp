#include "sovrisk/marginals.hpp"

#include "sovrisk/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sovrisk {

std::vector<ClassMarginal> build_marginals(const RatingPanel& ratings,
                                           const SpreadPanel& spreads) {
    if (ratings.countries != spreads.countries || ratings.dates != spreads.dates)
        throw std::invalid_argument("build_marginals: panels are not aligned");
    std::vector<ClassMarginal> marginals(static_cast<std::size_t>(ratings.dim));
    for (int x = 0; x < ratings.dim; ++x) marginals[static_cast<std::size_t>(x)].rank = x + 1;
    for (Eigen::Index c = 0; c < ratings.ranks.rows(); ++c)
        for (Eigen::Index t = 0; t < ratings.ranks.cols(); ++t) {
            const int rank = ratings.ranks(c, t);
            marginals[static_cast<std::size_t>(rank - 1)].samples.push_back(spreads.spreads(c, t));
        }
    for (auto& m : marginals) std::sort(m.samples.begin(), m.samples.end());
    return marginals;
}

double ecdf(const ClassMarginal& marginal, double y) {
    if (marginal.empty()) throw std::invalid_argument("ecdf: empty class marginal");
    const auto it = std::upper_bound(marginal.samples.begin(), marginal.samples.end(), y);
    return static_cast<double>(it - marginal.samples.begin()) /
           static_cast<double>(marginal.samples.size());
}

double quantile(const ClassMarginal& marginal, double u) {
    if (marginal.empty()) throw std::invalid_argument("quantile: empty class marginal");
    if (u < 0.0 || u > 1.0) throw std::invalid_argument("quantile: u outside [0,1]");
    const auto n = static_cast<double>(marginal.samples.size());
    auto idx = static_cast<std::ptrdiff_t>(std::ceil(u * n)) - 1;
    idx = std::clamp<std::ptrdiff_t>(idx, 0,
                                     static_cast<std::ptrdiff_t>(marginal.samples.size()) - 1);
    return marginal.samples[static_cast<std::size_t>(idx)];
}

double expected_class_spread(const ClassMarginal& marginal) {
    if (marginal.empty()) throw std::invalid_argument("expected_class_spread: empty class");
    return mean_of(marginal.samples);
}

MarginalStats marginal_stats(const ClassMarginal& marginal) {
    MarginalStats st;
    st.rank = marginal.rank;
    st.count = marginal.size();
    if (marginal.empty()) return st;
    const Moments mo = sample_moments(marginal.samples);
    st.mean = mo.mean;
    st.st_dev = mo.st_dev;
    st.skewness = mo.skewness;
    st.kurtosis = mo.kurtosis;
    return st;
}

AnovaResult anova_f(const std::vector<ClassMarginal>& marginals) {
    std::vector<const ClassMarginal*> groups;
    std::size_t total_n = 0;
    for (const auto& m : marginals)
        if (!m.empty()) {
            groups.push_back(&m);
            total_n += m.size();
        }
    if (groups.size() < 2) throw std::invalid_argument("anova_f: need at least two non-empty classes");
    if (total_n <= groups.size())
        throw std::invalid_argument("anova_f: need more observations than groups");

    double grand_sum = 0.0;
    for (const auto* g : groups)
        for (double x : g->samples) grand_sum += x;
    const double grand_mean = grand_sum / static_cast<double>(total_n);

    double ss_between = 0.0, ss_within = 0.0;
    for (const auto* g : groups) {
        const double m = mean_of(g->samples);
        ss_between += static_cast<double>(g->size()) * (m - grand_mean) * (m - grand_mean);
        for (double x : g->samples) ss_within += (x - m) * (x - m);
    }

    AnovaResult res;
    res.df_between = static_cast<std::int64_t>(groups.size()) - 1;
    res.df_within = static_cast<std::int64_t>(total_n - groups.size());
    const double ms_between = ss_between / static_cast<double>(res.df_between);
    const double ms_within = ss_within / static_cast<double>(res.df_within);
    if (ms_within == 0.0) {
        if (ms_between == 0.0) {
            res.f = 0.0;
            res.p_value = 1.0;
        } else {
            res.f = std::numeric_limits<double>::infinity();
            res.p_value = 0.0;
        }
        return res;
    }
    res.f = ms_between / ms_within;
    res.p_value = f_sf(res.f, static_cast<double>(res.df_between),
                       static_cast<double>(res.df_within));
    return res;
}

CorrelationResult series_correlation(const SpreadPanel& spreads) {
    if (spreads.n_dates() < 2)
        throw std::invalid_argument("series_correlation: need at least two dates");
    const auto n = static_cast<Eigen::Index>(spreads.n_countries());
    CorrelationResult res;
    res.corr = Eigen::MatrixXd::Identity(n, n);

    std::vector<std::vector<double>> series(static_cast<std::size_t>(n));
    std::vector<bool> constant(static_cast<std::size_t>(n), false);
    for (Eigen::Index c = 0; c < n; ++c) {
        auto& s = series[static_cast<std::size_t>(c)];
        s.resize(spreads.n_dates());
        for (std::size_t t = 0; t < spreads.n_dates(); ++t)
            s[t] = spreads.spreads(c, static_cast<Eigen::Index>(t));
        if (variance_of(s) == 0.0) {
            constant[static_cast<std::size_t>(c)] = true;
            res.zero_variance.push_back(static_cast<int>(c));
        }
    }
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = a + 1; b < n; ++b) {
            double r = 0.0;
            if (!constant[static_cast<std::size_t>(a)] && !constant[static_cast<std::size_t>(b)])
                r = pearson(series[static_cast<std::size_t>(a)], series[static_cast<std::size_t>(b)]);
            res.corr(a, b) = r;
            res.corr(b, a) = r;
        }
    return res;
}

}  // namespace sovrisk
