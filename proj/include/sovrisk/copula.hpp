#pragma once

#include "sovrisk/marginals.hpp"
#include "sovrisk/panel.hpp"
#include "sovrisk/rng.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace sovrisk {

// Gaussian copula over countries: a correlation matrix binding the
// per-class spread marginals into a joint draw. The matrix is fixed
// across rating configurations; only the marginal attached to a country
// changes with its simulated rank.
struct CopulaModel {
    std::vector<std::string> countries;
    Eigen::MatrixXd corr;            // N x N, symmetric, unit diagonal, PSD
    std::vector<int> degenerate;     // countries with constant spread series
};

// Normal-scores fit: pseudo-observations rank/(T+1) (midranks on ties),
// normal scores via the inverse CDF, Pearson correlation of the scores,
// then PSD repair. Constant series get an identity row/column and a flag.
CopulaModel fit_copula(const SpreadPanel& spreads);

// Clips negative eigenvalues to zero and rescales the diagonal to one.
Eigen::MatrixXd psd_repair(const Eigen::MatrixXd& corr);

// Lower-triangular Cholesky factor of the (repaired) correlation matrix;
// retries with diagonal jitter when the matrix is on the PSD boundary.
Eigen::MatrixXd copula_cholesky(const Eigen::MatrixXd& corr);

// One joint spread draw conditional on the rating vector: z ~ N(0, R),
// u = Phi(z), spread_c = quantile of the class marginal of ranks[c].
// Throws when a requested rank has an empty marginal.
std::vector<double> sample_joint(const CopulaModel& model, const std::vector<int>& ranks,
                                 const std::vector<ClassMarginal>& marginals, Rng& rng);

// Same draw against a precomputed Cholesky factor (hot path in
// simulations).
std::vector<double> sample_joint_chol(const Eigen::MatrixXd& chol, const std::vector<int>& ranks,
                                      const std::vector<ClassMarginal>& marginals, Rng& rng);

// Monte Carlo E[W_a * W_b] under the bivariate Gaussian sub-copula with
// correlation rho and the two class marginals.
double joint_second_moment(double rho, const ClassMarginal& a, const ClassMarginal& b,
                           std::int64_t mc_draws, Rng& rng);

// D x D table of E[W_a W_b] for one country pair: entry (a-1, b-1) uses
// the pair's copula correlation and the class marginals of ranks a and b.
// Empty classes yield zero entries (they are unreachable states).
Eigen::MatrixXd pair_second_moments(const CopulaModel& model, int country_a, int country_b,
                                    const std::vector<ClassMarginal>& marginals,
                                    std::int64_t mc_draws, Rng& rng);

void write_copula_csv(const CopulaModel& model, std::ostream& out);
CopulaModel read_copula_csv(std::istream& in);

}  // namespace sovrisk
