#include "sovrisk/changepoint.hpp"

#include "sovrisk/parallel.hpp"
#include "sovrisk/rng.hpp"
#include "sovrisk/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sovrisk {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Suffix tables g[m][s] = best log-likelihood of splitting [s, S) into m
// segments of length >= min_seg each. g[m] is computed for m = 1..k.
class SuffixTables {
public:
    SuffixTables(const TransitionCounts& counts, std::int64_t min_seg)
        : counts_(&counts), min_seg_(min_seg), s_end_(counts.steps()) {
        if (min_seg_ < 1) throw std::invalid_argument("find_changepoints: min_seg must be >= 1");
        g_.emplace_back();  // m = 0 placeholder
    }

    std::int64_t horizon() const { return s_end_; }

    void ensure(int m_target) {
        while (static_cast<int>(g_.size()) <= m_target) {
            const int m = static_cast<int>(g_.size());
            std::vector<double> g(static_cast<std::size_t>(s_end_) + 1, kNegInf);
            if (m == 1) {
                for (std::int64_t s = 0; s + min_seg_ <= s_end_; ++s)
                    g[static_cast<std::size_t>(s)] = counts_->segment_loglik(s, s_end_);
            } else {
                const auto& prev = g_[static_cast<std::size_t>(m - 1)];
                for (std::int64_t s = 0; s + m * min_seg_ <= s_end_; ++s) {
                    double best = kNegInf;
                    for (std::int64_t e = s + min_seg_; e + (m - 1) * min_seg_ <= s_end_; ++e) {
                        const double v =
                            counts_->segment_loglik(s, e) + prev[static_cast<std::size_t>(e)];
                        if (v > best) best = v;
                    }
                    g[static_cast<std::size_t>(s)] = best;
                }
            }
            g_.push_back(std::move(g));
        }
    }

    // Reconstructs the lexicographically smallest optimal tau vector for
    // exactly k breaks (k + 1 segments).
    std::vector<std::int64_t> reconstruct(int k) {
        ensure(k);
        std::vector<std::int64_t> taus;
        std::int64_t pos = 0;
        for (int m = k; m >= 1; --m) {
            const auto& g = g_[static_cast<std::size_t>(m)];
            double best = kNegInf;
            std::int64_t arg = -1;
            for (std::int64_t e = pos + min_seg_; e + m * min_seg_ <= s_end_; ++e) {
                const double v = counts_->segment_loglik(pos, e) + g[static_cast<std::size_t>(e)];
                if (v > best) {
                    best = v;
                    arg = e;
                }
            }
            if (arg < 0) throw std::invalid_argument("find_changepoints: infeasible min_seg");
            taus.push_back(arg);
            pos = arg;
        }
        return taus;
    }

private:
    const TransitionCounts* counts_;
    std::int64_t min_seg_;
    std::int64_t s_end_;
    std::vector<std::vector<double>> g_;
};

std::vector<std::int64_t> coarse_then_refine(const TransitionCounts& counts, int k,
                                             const SearchOptions& opts) {
    const std::int64_t s_end = counts.steps();
    const std::int64_t stride = std::max<std::int64_t>(1, opts.stride);

    // Stage 1: exact DP restricted to grid multiples of `stride`.
    std::vector<std::int64_t> grid;
    for (std::int64_t s = stride; s < s_end; s += stride) grid.push_back(s);
    const std::size_t m_count = grid.size();
    if (m_count < static_cast<std::size_t>(k)) return find_changepoints(counts, k, {opts.min_seg});

    auto seg_ok = [&](std::int64_t a, std::int64_t b) { return b - a >= opts.min_seg; };

    // g[m][gi] = best over [grid[gi], S) in m segments with grid breaks.
    std::vector<std::vector<double>> g(static_cast<std::size_t>(k) + 1,
                                       std::vector<double>(m_count, kNegInf));
    for (std::size_t gi = 0; gi < m_count; ++gi)
        if (seg_ok(grid[gi], s_end)) g[1][gi] = counts.segment_loglik(grid[gi], s_end);
    for (int m = 2; m <= k; ++m)
        for (std::size_t gi = 0; gi < m_count; ++gi) {
            double best = kNegInf;
            for (std::size_t ge = gi + 1; ge < m_count; ++ge) {
                if (!seg_ok(grid[gi], grid[ge]) || g[static_cast<std::size_t>(m - 1)][ge] == kNegInf)
                    continue;
                const double v = counts.segment_loglik(grid[gi], grid[ge]) +
                                 g[static_cast<std::size_t>(m - 1)][ge];
                if (v > best) best = v;
            }
            g[static_cast<std::size_t>(m)][gi] = best;
        }

    std::vector<std::int64_t> taus;
    std::int64_t pos = 0;
    for (int m = k; m >= 1; --m) {
        double best = kNegInf;
        std::int64_t arg = -1;
        for (std::size_t ge = 0; ge < m_count; ++ge) {
            if (grid[ge] <= pos || !seg_ok(pos, grid[ge]) ||
                g[static_cast<std::size_t>(m)][ge] == kNegInf)
                continue;
            const double v = counts.segment_loglik(pos, grid[ge]) +
                             g[static_cast<std::size_t>(m)][ge];
            if (v > best) {
                best = v;
                arg = grid[ge];
            }
        }
        if (arg < 0) return find_changepoints(counts, k, {opts.min_seg});
        taus.push_back(arg);
        pos = arg;
    }

    // Stage 2: per-break refinement on the daily scale within one stride
    // of the coarse solution. Two coordinate passes.
    for (int pass = 0; pass < 2; ++pass) {
        for (int m = 0; m < k; ++m) {
            const std::int64_t prev = (m == 0) ? 0 : taus[static_cast<std::size_t>(m - 1)];
            const std::int64_t next =
                (m == k - 1) ? s_end : taus[static_cast<std::size_t>(m + 1)];
            const std::int64_t lo = std::max(prev + opts.min_seg, taus[m] - stride);
            const std::int64_t hi = std::min(next - opts.min_seg, taus[m] + stride);
            double best = kNegInf;
            std::int64_t arg = taus[m];
            for (std::int64_t e = lo; e <= hi; ++e) {
                const double v = counts.segment_loglik(prev, e) + counts.segment_loglik(e, next);
                if (v > best) {
                    best = v;
                    arg = e;
                }
            }
            taus[static_cast<std::size_t>(m)] = arg;
        }
    }
    return taus;
}

std::vector<std::int64_t> segment_bounds(const std::vector<std::int64_t>& taus,
                                         std::int64_t s_end) {
    std::vector<std::int64_t> bounds;
    bounds.push_back(0);
    for (std::int64_t t : taus) bounds.push_back(t);
    bounds.push_back(s_end);
    for (std::size_t i = 1; i < bounds.size(); ++i)
        if (bounds[i] <= bounds[i - 1])
            throw std::invalid_argument("change points must be strictly increasing inside (0, S)");
    return bounds;
}

Eigen::MatrixXi simulate_panel_ranks(const Eigen::MatrixXd& p, const Eigen::VectorXi& initial,
                                     std::int64_t n_dates, Rng& rng) {
    const auto n = initial.size();
    Eigen::MatrixXi ranks(n, static_cast<Eigen::Index>(n_dates));
    for (Eigen::Index c = 0; c < n; ++c) {
        int state = initial(c);
        ranks(c, 0) = state;
        for (std::int64_t t = 1; t < n_dates; ++t) {
            state = sample_next_rank(p, state, rng.uniform01());
            ranks(c, static_cast<Eigen::Index>(t)) = state;
        }
    }
    return ranks;
}

}  // namespace

std::vector<std::int64_t> find_changepoints(const TransitionCounts& counts, int k,
                                            const SearchOptions& opts) {
    if (k < 1) throw std::invalid_argument("find_changepoints: k must be >= 1");
    const std::int64_t min_seg = std::max<std::int64_t>(1, opts.min_seg);
    if ((k + 1) * min_seg > counts.steps())
        throw std::invalid_argument("find_changepoints: infeasible min_seg for this horizon");
    if (opts.two_stage) return coarse_then_refine(counts, k, opts);
    SuffixTables tables(counts, min_seg);
    return tables.reconstruct(k);
}

std::vector<std::int64_t> find_changepoints(const RatingPanel& panel, int k,
                                            std::int64_t min_seg) {
    TransitionCounts counts(panel.ranks, panel.dim);
    SearchOptions opts;
    opts.min_seg = min_seg;
    return find_changepoints(counts, k, opts);
}

double segmented_loglik(const TransitionCounts& counts, const std::vector<std::int64_t>& taus) {
    const auto bounds = segment_bounds(taus, counts.steps());
    double total = 0.0;
    for (std::size_t m = 0; m + 1 < bounds.size(); ++m)
        total += counts.segment_loglik(bounds[m], bounds[m + 1]);
    return total;
}

double lrt_statistic(const TransitionCounts& counts, const std::vector<std::int64_t>& taus) {
    const double pooled = counts.segment_loglik(0, counts.steps());
    const double lambda = 2.0 * (segmented_loglik(counts, taus) - pooled);
    return std::max(0.0, lambda);  // clip FP noise; the gap is >= 0 by construction
}

double lrt_statistic(const RatingPanel& panel, const std::vector<std::int64_t>& taus) {
    TransitionCounts counts(panel.ranks, panel.dim);
    return lrt_statistic(counts, taus);
}

std::int64_t observed_support_params(const TransitionCounts& counts,
                                     const std::vector<std::int64_t>& taus) {
    const auto bounds = segment_bounds(taus, counts.steps());
    std::int64_t params = 0;
    for (std::size_t m = 0; m + 1 < bounds.size(); ++m) {
        const CountMatrix n = counts.counts(bounds[m], bounds[m + 1]);
        for (Eigen::Index i = 0; i < n.rows(); ++i)
            for (Eigen::Index j = 0; j < n.cols(); ++j)
                if (i != j && n(i, j) > 0) ++params;
    }
    return params;
}

double bic_score(double loglik, std::int64_t param_count, std::int64_t s) {
    if (s < 2) throw std::invalid_argument("bic_score: sequence length must be >= 2");
    return std::log(static_cast<double>(s)) * static_cast<double>(param_count) - 2.0 * loglik;
}

ModelSelection model_select(const RatingPanel& panel, int k_max, const SearchOptions& opts) {
    if (k_max < 0) throw std::invalid_argument("model_select: k_max must be >= 0");
    TransitionCounts counts(panel.ranks, panel.dim);
    const std::int64_t s = counts.observations();
    const std::int64_t min_seg = std::max<std::int64_t>(1, opts.min_seg);

    ModelSelection sel;
    for (int k = 0; k <= k_max; ++k) {
        if ((k + 1) * min_seg > counts.steps()) break;  // no room for more segments
        ChangePointFit fit;
        fit.k = k;
        if (k > 0) fit.taus = find_changepoints(counts, k, opts);
        fit.total_loglik = segmented_loglik(counts, fit.taus);
        fit.param_count = observed_support_params(counts, fit.taus);
        fit.bic = bic_score(fit.total_loglik, fit.param_count, s);
        sel.by_k.push_back(std::move(fit));
    }
    if (sel.by_k.empty()) throw std::invalid_argument("model_select: panel too short");
    sel.best = sel.by_k.front();
    for (const auto& fit : sel.by_k)
        if (fit.bic < sel.best.bic) sel.best = fit;  // ties keep the smaller k
    return sel;
}

double BootstrapResult::p_value(double observed) const {
    std::size_t exceed = 0;
    for (double l : lambdas)
        if (l >= observed) ++exceed;
    return static_cast<double>(1 + exceed) / static_cast<double>(lambdas.size() + 1);
}

BootstrapResult bootstrap_critical(const RatingPanel& panel, int k, const SearchOptions& opts,
                                   const BootstrapOptions& boot) {
    if (boot.replicates < 1)
        throw std::invalid_argument("bootstrap_critical: need at least one replicate");
    if (boot.alpha <= 0.0 || boot.alpha >= 1.0)
        throw std::invalid_argument("bootstrap_critical: alpha must lie in (0,1)");
    TransitionCounts counts(panel.ranks, panel.dim);
    const Eigen::MatrixXd pooled = estimate_matrix(counts.counts(0, counts.steps()));
    const Eigen::VectorXi initial = panel.ranks.col(0);
    const std::int64_t n_dates = static_cast<std::int64_t>(panel.n_dates());

    BootstrapResult result;
    result.lambdas.assign(static_cast<std::size_t>(boot.replicates), 0.0);
    parallel_for_index(static_cast<std::size_t>(boot.replicates), boot.threads,
                       [&](std::size_t r) {
                           Rng rng(replicate_seed(boot.seed, r));
                           const Eigen::MatrixXi ranks =
                               simulate_panel_ranks(pooled, initial, n_dates, rng);
                           TransitionCounts sim_counts(ranks, panel.dim);
                           const auto taus = find_changepoints(sim_counts, k, opts);
                           result.lambdas[r] = lrt_statistic(sim_counts, taus);
                       });

    std::vector<double> sorted = result.lambdas;
    std::sort(sorted.begin(), sorted.end());
    result.critical_value = nearest_rank_quantile(sorted, 1.0 - boot.alpha);
    return result;
}

}  // namespace sovrisk
