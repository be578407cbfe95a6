#pragma once

#include "sovrisk/panel.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace sovrisk {

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

// Transition matrix on the rating scale together with the time interval
// it was estimated on ([start, end) in transition indices; end = -1 means
// open-ended).
struct TransitionMatrix {
    Eigen::MatrixXd probs;
    std::int64_t start = 0;
    std::int64_t end = -1;
};

// Rating dynamics that are homogeneous between consecutive break points:
// matrix l governs transitions departing at times t in [tau_l, tau_{l+1}),
// with tau_0 = 0 and tau_{k+1} = infinity.
struct SegmentedChainModel {
    std::vector<std::int64_t> taus;          // strictly increasing, > 0
    std::vector<Eigen::MatrixXd> matrices;   // taus.size() + 1 entries

    int dim() const;
    std::size_t segments() const { return matrices.size(); }
    std::size_t segment_at(std::int64_t t) const;
    void validate() const;

    static SegmentedChainModel single(Eigen::MatrixXd p);
};

// Pooled transition counts with per-prefix cumulative tables, so the
// count matrix of any interval costs O(D^2).
class TransitionCounts {
public:
    TransitionCounts(const Eigen::MatrixXi& ranks, int dim);

    std::int64_t steps() const { return steps_; }  // T - 1 transition slots
    int dim() const { return dim_; }
    std::int64_t observations() const { return n_dates_; }  // per-country dates T

    // n_ij over transitions departing in [a, b).
    CountMatrix counts(std::int64_t a, std::int64_t b) const;

    // Log-likelihood of the interval under its own row-wise MLE:
    // sum_ij n_ij * log(n_ij / row_i); empty cells contribute zero.
    double segment_loglik(std::int64_t a, std::int64_t b) const;

private:
    int dim_ = 0;
    std::int64_t steps_ = 0;
    std::int64_t n_dates_ = 0;
    std::vector<std::int64_t> prefix_;  // (steps+1) x D x D, counts over [0, t)

    std::int64_t prefix_at(std::int64_t t, int i, int j) const {
        return prefix_[(static_cast<std::size_t>(t) * dim_ + i) * dim_ + j];
    }
};

CountMatrix count_transitions(const RatingPanel& panel, std::int64_t a, std::int64_t b);

// Row-wise maximum-likelihood estimate; rows without observations become
// identity rows so the result stays stochastic.
Eigen::MatrixXd estimate_matrix(const CountMatrix& counts);

// P^n by exponentiation by squaring. Rows are renormalized whenever
// accumulated drift exceeds 1e-12; horizons near 10^3 steps would
// otherwise push row sums visibly away from one.
Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& p, std::int64_t n);

// Full t-step transition matrix of the segmented chain: the product of
// per-segment powers up to time t.
Eigen::MatrixXd piecewise_transition(const SegmentedChainModel& model, std::int64_t t);

// Row `rank` of the above (1-based rank).
Eigen::RowVectorXd piecewise_propagate(const SegmentedChainModel& model, int rank,
                                       std::int64_t t);

// Iterates the t-step matrices of a segmented chain one step at a time;
// cheaper than repeated piecewise_transition inside recursions over t.
class ChainPropagator {
public:
    explicit ChainPropagator(const SegmentedChainModel& model);
    const Eigen::MatrixXd& current() const { return m_; }  // matrix at time t
    std::int64_t time() const { return t_; }
    void advance();  // t -> t+1

private:
    const SegmentedChainModel* model_;
    Eigen::MatrixXd m_;
    std::int64_t t_ = 0;
};

// Successor state by the cumulative-row rule: the smallest j whose
// cumulative row probability exceeds u. `current` and the result are
// 1-based ranks.
int sample_next_rank(const Eigen::MatrixXd& p, int current, double u);

// Jafry-Schuermann mobility: mean singular value of P - I.
double mobility_metric(const Eigen::MatrixXd& p);

// Mobility gap M_SVD(a) - M_SVD(b); antisymmetric by construction.
double js_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

void write_matrix_csv(const Eigen::MatrixXd& m, std::ostream& out);
Eigen::MatrixXd read_matrix_csv(std::istream& in);

}  // namespace sovrisk
