#include "sovrisk/copula.hpp"

#include "sovrisk/stats.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace sovrisk {

namespace {

// Pseudo-observations rank/(T+1) with midranks on ties.
std::vector<double> pseudo_observations(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> u(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) u[order[k]] = rank / static_cast<double>(n + 1);
        i = j + 1;
    }
    return u;
}

}  // namespace

Eigen::MatrixXd psd_repair(const Eigen::MatrixXd& corr) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr);
    if (eig.info() != Eigen::Success)
        throw std::runtime_error("psd_repair: eigendecomposition failed");
    if (eig.eigenvalues().minCoeff() >= 0.0) return corr;
    Eigen::VectorXd clipped = eig.eigenvalues().cwiseMax(0.0);
    Eigen::MatrixXd repaired =
        eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
    // rescale to a proper correlation matrix
    Eigen::VectorXd d = repaired.diagonal().cwiseMax(1e-300).cwiseSqrt();
    for (Eigen::Index i = 0; i < repaired.rows(); ++i)
        for (Eigen::Index j = 0; j < repaired.cols(); ++j) repaired(i, j) /= d(i) * d(j);
    repaired.diagonal().setOnes();
    repaired = 0.5 * (repaired + repaired.transpose());
    return repaired;
}

CopulaModel fit_copula(const SpreadPanel& spreads) {
    if (spreads.n_dates() < 3)
        throw std::invalid_argument("fit_copula: need at least three dates");
    const auto n = static_cast<Eigen::Index>(spreads.n_countries());
    const auto t_len = spreads.n_dates();

    CopulaModel model;
    model.countries = spreads.countries;
    model.corr = Eigen::MatrixXd::Identity(n, n);

    std::vector<std::vector<double>> scores(static_cast<std::size_t>(n));
    std::vector<bool> constant(static_cast<std::size_t>(n), false);
    for (Eigen::Index c = 0; c < n; ++c) {
        std::vector<double> series(t_len);
        for (std::size_t t = 0; t < t_len; ++t)
            series[t] = spreads.spreads(c, static_cast<Eigen::Index>(t));
        if (variance_of(series) == 0.0) {
            constant[static_cast<std::size_t>(c)] = true;
            model.degenerate.push_back(static_cast<int>(c));
            continue;
        }
        auto u = pseudo_observations(series);
        auto& z = scores[static_cast<std::size_t>(c)];
        z.resize(t_len);
        for (std::size_t t = 0; t < t_len; ++t) z[t] = normal_quantile(u[t]);
    }

    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = a + 1; b < n; ++b) {
            double r = 0.0;
            if (!constant[static_cast<std::size_t>(a)] && !constant[static_cast<std::size_t>(b)])
                r = pearson(scores[static_cast<std::size_t>(a)],
                            scores[static_cast<std::size_t>(b)]);
            model.corr(a, b) = r;
            model.corr(b, a) = r;
        }
    model.corr = psd_repair(model.corr);
    return model;
}

Eigen::MatrixXd copula_cholesky(const Eigen::MatrixXd& corr) {
    if (corr.rows() != corr.cols()) throw std::invalid_argument("copula_cholesky: not square");
    Eigen::MatrixXd m = corr;
    double jitter = 1e-10;
    for (int attempt = 0; attempt < 8; ++attempt) {
        Eigen::LLT<Eigen::MatrixXd> llt(m);
        if (llt.info() == Eigen::Success) return llt.matrixL();
        m = corr;
        m.diagonal().array() += jitter;
        jitter *= 10.0;
    }
    throw std::runtime_error("copula_cholesky: matrix is not positive semi-definite");
}

std::vector<double> sample_joint_chol(const Eigen::MatrixXd& chol, const std::vector<int>& ranks,
                                      const std::vector<ClassMarginal>& marginals, Rng& rng) {
    const auto n = chol.rows();
    if (static_cast<Eigen::Index>(ranks.size()) != n)
        throw std::invalid_argument("sample_joint: rank vector length mismatch");
    Eigen::VectorXd raw(n);
    for (Eigen::Index i = 0; i < n; ++i) raw(i) = rng.normal();
    const Eigen::VectorXd z = chol * raw;
    std::vector<double> out(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const int rank = ranks[static_cast<std::size_t>(i)];
        if (rank < 1 || rank > static_cast<int>(marginals.size()))
            throw std::invalid_argument("sample_joint: rank outside 1..D");
        const auto& marginal = marginals[static_cast<std::size_t>(rank - 1)];
        if (marginal.empty())
            throw std::invalid_argument("sample_joint: empty marginal for rank " +
                                        std::to_string(rank));
        out[static_cast<std::size_t>(i)] = quantile(marginal, norm_cdf(z(i)));
    }
    return out;
}

std::vector<double> sample_joint(const CopulaModel& model, const std::vector<int>& ranks,
                                 const std::vector<ClassMarginal>& marginals, Rng& rng) {
    return sample_joint_chol(copula_cholesky(model.corr), ranks, marginals, rng);
}

double joint_second_moment(double rho, const ClassMarginal& a, const ClassMarginal& b,
                           std::int64_t mc_draws, Rng& rng) {
    if (mc_draws < 1) throw std::invalid_argument("joint_second_moment: need mc_draws >= 1");
    if (a.empty() || b.empty())
        throw std::invalid_argument("joint_second_moment: empty class marginal");
    rho = std::clamp(rho, -1.0, 1.0);
    const double tail = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    double sum = 0.0;
    for (std::int64_t i = 0; i < mc_draws; ++i) {
        const double z1 = rng.normal();
        const double z2 = rho * z1 + tail * rng.normal();
        sum += quantile(a, norm_cdf(z1)) * quantile(b, norm_cdf(z2));
    }
    return sum / static_cast<double>(mc_draws);
}

Eigen::MatrixXd pair_second_moments(const CopulaModel& model, int country_a, int country_b,
                                    const std::vector<ClassMarginal>& marginals,
                                    std::int64_t mc_draws, Rng& rng) {
    const auto n = model.corr.rows();
    if (country_a < 0 || country_b < 0 || country_a >= n || country_b >= n)
        throw std::invalid_argument("pair_second_moments: country index out of range");
    if (country_a == country_b)
        throw std::invalid_argument("pair_second_moments: need two distinct countries");
    const double rho = model.corr(country_a, country_b);
    const auto d = static_cast<Eigen::Index>(marginals.size());
    Eigen::MatrixXd table = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index a = 0; a < d; ++a) {
        if (marginals[static_cast<std::size_t>(a)].empty()) continue;
        for (Eigen::Index b = 0; b < d; ++b) {
            if (marginals[static_cast<std::size_t>(b)].empty()) continue;
            table(a, b) = joint_second_moment(rho, marginals[static_cast<std::size_t>(a)],
                                              marginals[static_cast<std::size_t>(b)], mc_draws, rng);
        }
    }
    return table;
}

void write_copula_csv(const CopulaModel& model, std::ostream& out) {
    char buf[64];
    out << "country";
    for (const auto& c : model.countries) out << ',' << c;
    out << '\n';
    for (Eigen::Index i = 0; i < model.corr.rows(); ++i) {
        out << model.countries[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < model.corr.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", model.corr(i, j));
            out << ',' << buf;
        }
        out << '\n';
    }
}

CopulaModel read_copula_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("copula csv: empty file");
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) header.push_back(field);
    }
    if (header.size() < 2 || header[0] != "country")
        throw std::invalid_argument("copula csv: bad header");
    CopulaModel model;
    model.countries.assign(header.begin() + 1, header.end());
    const auto n = static_cast<Eigen::Index>(model.countries.size());
    model.corr.resize(n, n);
    Eigen::Index row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (row >= n) throw std::invalid_argument("copula csv: too many rows");
        std::stringstream ss(line);
        std::string field;
        std::getline(ss, field, ',');  // country label
        for (Eigen::Index j = 0; j < n; ++j) {
            if (!std::getline(ss, field, ','))
                throw std::invalid_argument("copula csv: short row");
            model.corr(row, j) = std::stod(field);
        }
        ++row;
    }
    if (row != n) throw std::invalid_argument("copula csv: row count mismatch");
    return model;
}

}  // namespace sovrisk
