#pragma once

#include <Eigen/Dense>
#include <vector>

#include "hpi/rng.hpp"

namespace hpi {

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double log_sum_exp(const std::vector<double>& logs);

// Samples an index with probability proportional to exp(log_weights[k]),
// normalized in log space.
int sample_from_log_weights(const std::vector<double>& log_weights, Rng& rng);

void symmetrize(Eigen::MatrixXd& m);

// Cholesky of a symmetric matrix with one retry after adding
// 1e-10 * trace jitter to the diagonal. Throws NumericError (carrying
// time_step when provided) if the retry also fails.
Eigen::LLT<Eigen::MatrixXd> robust_llt(const Eigen::MatrixXd& s, int time_step = -1);

// log N(x; mean, cov) using robust_llt.
double mvn_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                  const Eigen::MatrixXd& cov, int time_step = -1);

// Draws from N(mean, cov). Falls back to an eigendecomposition with
// negative eigenvalues clamped to zero when the matrix is only PSD.
Eigen::VectorXd mvn_sample(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                           Rng& rng);

double log_factorial(int n);

}  // namespace hpi
