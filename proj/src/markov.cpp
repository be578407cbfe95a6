#include "sovrisk/markov.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace sovrisk {

namespace {

void check_stochastic(const Eigen::MatrixXd& p, double tol = 1e-9) {
    if (p.rows() != p.cols()) throw std::invalid_argument("transition matrix must be square");
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        if ((p.row(i).array() < -1e-15).any())
            throw std::invalid_argument("transition matrix has negative entries");
        if (std::fabs(p.row(i).sum() - 1.0) > tol)
            throw std::invalid_argument("transition matrix row does not sum to 1");
    }
}

void renormalize_rows(Eigen::MatrixXd& p) {
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        const double s = p.row(i).sum();
        if (s > 0.0) p.row(i) /= s;
    }
}

}  // namespace

int SegmentedChainModel::dim() const {
    if (matrices.empty()) throw std::invalid_argument("segmented chain has no matrices");
    return static_cast<int>(matrices.front().rows());
}

std::size_t SegmentedChainModel::segment_at(std::int64_t t) const {
    std::size_t l = 0;
    while (l < taus.size() && t >= taus[l]) ++l;
    return l;
}

void SegmentedChainModel::validate() const {
    if (matrices.size() != taus.size() + 1)
        throw std::invalid_argument("segmented chain: need one matrix per segment");
    const int d = dim();
    for (const auto& m : matrices) {
        if (m.rows() != d || m.cols() != d)
            throw std::invalid_argument("segmented chain: inconsistent matrix dimensions");
        check_stochastic(m);
    }
    for (std::size_t l = 0; l < taus.size(); ++l) {
        if (taus[l] <= 0 || (l > 0 && taus[l] <= taus[l - 1]))
            throw std::invalid_argument("segmented chain: breaks must be strictly increasing and > 0");
    }
}

SegmentedChainModel SegmentedChainModel::single(Eigen::MatrixXd p) {
    SegmentedChainModel m;
    m.matrices.push_back(std::move(p));
    m.validate();
    return m;
}

TransitionCounts::TransitionCounts(const Eigen::MatrixXi& ranks, int dim) : dim_(dim) {
    n_dates_ = ranks.cols();
    steps_ = std::max<std::int64_t>(0, ranks.cols() - 1);
    prefix_.assign(static_cast<std::size_t>(steps_ + 1) * dim_ * dim_, 0);
    for (std::int64_t t = 0; t < steps_; ++t) {
        const std::size_t base = static_cast<std::size_t>(t + 1) * dim_ * dim_;
        const std::size_t prev = static_cast<std::size_t>(t) * dim_ * dim_;
        for (int e = 0; e < dim_ * dim_; ++e) prefix_[base + e] = prefix_[prev + e];
        for (Eigen::Index c = 0; c < ranks.rows(); ++c) {
            const int i = ranks(c, static_cast<Eigen::Index>(t));
            const int j = ranks(c, static_cast<Eigen::Index>(t + 1));
            if (i < 1 || i > dim_ || j < 1 || j > dim_)
                throw std::invalid_argument("rank outside 1..D in rating panel");
            ++prefix_[base + static_cast<std::size_t>(i - 1) * dim_ + (j - 1)];
        }
    }
}

CountMatrix TransitionCounts::counts(std::int64_t a, std::int64_t b) const {
    if (a < 0 || b > steps_ || a > b)
        throw std::invalid_argument("transition counts: interval outside [0, steps]");
    CountMatrix n(dim_, dim_);
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) n(i, j) = prefix_at(b, i, j) - prefix_at(a, i, j);
    return n;
}

double TransitionCounts::segment_loglik(std::int64_t a, std::int64_t b) const {
    if (a > b) throw std::invalid_argument("segment_loglik: need a <= b");
    if (a == b) return 0.0;  // empty interval carries no information
    if (a < 0 || b > steps_)
        throw std::invalid_argument("segment_loglik: interval outside [0, steps]");
    double ll = 0.0;
    for (int i = 0; i < dim_; ++i) {
        std::int64_t row_total = 0;
        for (int j = 0; j < dim_; ++j) row_total += prefix_at(b, i, j) - prefix_at(a, i, j);
        if (row_total == 0) continue;
        const double log_row = std::log(static_cast<double>(row_total));
        for (int j = 0; j < dim_; ++j) {
            const std::int64_t n = prefix_at(b, i, j) - prefix_at(a, i, j);
            if (n > 0) ll += static_cast<double>(n) * (std::log(static_cast<double>(n)) - log_row);
        }
    }
    return ll;
}

CountMatrix count_transitions(const RatingPanel& panel, std::int64_t a, std::int64_t b) {
    TransitionCounts tc(panel.ranks, panel.dim);
    if (a == b) return CountMatrix::Zero(panel.dim, panel.dim);
    return tc.counts(a, b);
}

Eigen::MatrixXd estimate_matrix(const CountMatrix& counts) {
    if (counts.rows() != counts.cols()) throw std::invalid_argument("count matrix must be square");
    const Eigen::Index d = counts.rows();
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        const std::int64_t row_total = counts.row(i).sum();
        if (row_total == 0) {
            p(i, i) = 1.0;  // unvisited state persists
        } else {
            for (Eigen::Index j = 0; j < d; ++j)
                p(i, j) = static_cast<double>(counts(i, j)) / static_cast<double>(row_total);
        }
    }
    return p;
}

Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& p, std::int64_t n) {
    if (n < 0) throw std::invalid_argument("matrix_power: negative exponent");
    check_stochastic(p, 1e-9);
    const Eigen::Index d = p.rows();
    Eigen::MatrixXd result = Eigen::MatrixXd::Identity(d, d);
    Eigen::MatrixXd base = p;
    auto guard = [](Eigen::MatrixXd& m) {
        double drift = 0.0;
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            drift = std::max(drift, std::fabs(m.row(i).sum() - 1.0));
        if (drift > 1e-12) renormalize_rows(m);
    };
    while (n > 0) {
        if (n & 1) {
            result = result * base;
            guard(result);
        }
        n >>= 1;
        if (n > 0) {
            base = base * base;
            guard(base);
        }
    }
    return result;
}

Eigen::MatrixXd piecewise_transition(const SegmentedChainModel& model, std::int64_t t) {
    if (t < 0) throw std::invalid_argument("piecewise_transition: negative time");
    model.validate();
    const std::size_t l = model.segment_at(t);
    const int d = model.dim();
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(d, d);
    std::int64_t prev = 0;
    for (std::size_t seg = 0; seg < l; ++seg) {
        m = m * matrix_power(model.matrices[seg], model.taus[seg] - prev);
        prev = model.taus[seg];
    }
    m = m * matrix_power(model.matrices[l], t - prev);
    return m;
}

Eigen::RowVectorXd piecewise_propagate(const SegmentedChainModel& model, int rank,
                                       std::int64_t t) {
    const int d = model.dim();
    if (rank < 1 || rank > d) throw std::invalid_argument("piecewise_propagate: rank outside 1..D");
    return piecewise_transition(model, t).row(rank - 1);
}

ChainPropagator::ChainPropagator(const SegmentedChainModel& model) : model_(&model) {
    model.validate();
    m_ = Eigen::MatrixXd::Identity(model.dim(), model.dim());
}

void ChainPropagator::advance() {
    // transition departing at time t_ is governed by t_'s segment
    m_ = m_ * model_->matrices[model_->segment_at(t_)];
    ++t_;
}

int sample_next_rank(const Eigen::MatrixXd& p, int current, double u) {
    const Eigen::Index d = p.cols();
    if (current < 1 || current > d)
        throw std::invalid_argument("sample_next_rank: state outside 1..D");
    double cum = 0.0;
    Eigen::Index last_positive = static_cast<Eigen::Index>(current) - 1;
    for (Eigen::Index j = 0; j < d; ++j) {
        const double pj = p(current - 1, j);
        if (pj > 0.0) last_positive = j;
        cum += pj;
        if (u < cum) return static_cast<int>(j) + 1;
    }
    // u landed on residual rounding mass past the final cumulative value
    return static_cast<int>(last_positive) + 1;
}

double mobility_metric(const Eigen::MatrixXd& p) {
    check_stochastic(p, 1e-9);
    const Eigen::MatrixXd mobility = p - Eigen::MatrixXd::Identity(p.rows(), p.cols());
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(mobility);
    return svd.singularValues().sum() / static_cast<double>(p.rows());
}

double js_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("js_distance: dimension mismatch");
    return mobility_metric(a) - mobility_metric(b);
}

void write_matrix_csv(const Eigen::MatrixXd& m, std::ostream& out) {
    char buf[64];
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
            out << (j ? "," : "") << buf;
        }
        out << '\n';
    }
}

Eigen::MatrixXd read_matrix_csv(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) row.push_back(std::stod(field));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::invalid_argument("matrix csv: empty");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size())
            throw std::invalid_argument("matrix csv: ragged rows");
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return m;
}

}  // namespace sovrisk
