#pragma once

#include <Eigen/Dense>
#include <vector>

#include "hpi/fit.hpp"
#include "hpi/simulate.hpp"
#include "hpi/trend.hpp"

namespace hpi {

// Minimum-cost one-to-one assignment (Hungarian, O(n^3)) on a square cost
// matrix; returns the column matched to each row.
std::vector<int> hungarian_assignment(const Eigen::MatrixXd& cost);

// Normalized Hamming distance between labelings after the optimal
// label-to-label mapping (rectangular confusion matrices padded with
// zero-cost dummy labels). Range [0, 1].
double hamming_optimal(const std::vector<int>& z_est, const std::vector<int>& z_true);

// Gelman-Rubin potential scale reduction factor over >= 2 equal-length
// chains: R-hat = sqrt(((n-1)/n W + B/n) / W).
double psrf(const std::vector<std::vector<double>>& chains);

struct Prediction {
  int region = 0;
  int month = 0;
  double truth_price = 0.0;
  double mean_price = 0.0;
  double lo95 = 0.0;
  double hi95 = 0.0;
};

// Posterior predictive prices for held-out observations: per posterior
// sample, simulate observations through the emission model, convert to
// price space (divide by scale, exponentiate, multiply by g_t), average,
// and take empirical 95% interval bounds.
std::vector<Prediction> predict_prices(const ChainArchive& archive,
                                       const TestSet& test, const GlobalTrend& trend,
                                       Rng& rng, int sims_per_sample = 4);

struct Metrics {
  double rmse = 0.0;
  double mean_ape = 0.0;
  double median_ape = 0.0;
  double ape90 = 0.0;
  double p10 = 0.0;  // share with APE <= 0.10 (boundary inclusive)
};

Metrics compute_metrics(const std::vector<double>& pred,
                        const std::vector<double>& truth);

// Independent per-region baseline: scalar linear-Gaussian state space fit
// by EM (a, q = innovation variance, R, beta), smoothed states returned.
struct EmFit {
  Eigen::VectorXd x_smooth;  // T
  Eigen::VectorXd x_var;     // T
  std::vector<double> loglik_trace;  // observed-data loglik per iteration
  double a = 0.0, q = 0.0, R = 0.0;
  Eigen::VectorXd beta;  // H
  bool low_data = false; // fewer than 5 observations in the region
};

struct EmOptions {
  int max_iter = 200;
  double tol = 1e-8;
  double init_state_var = 4.0;
};

EmFit baseline_em_kalman(const StreamPanel& panel, int region,
                         const EmOptions& opts = {});

struct IndexSummary {
  Eigen::MatrixXd mean;  // p x T posterior mean of x
  Eigen::MatrixXd lo95;  // p x T
  Eigen::MatrixXd hi95;  // p x T
  Eigen::MatrixXd cooccurrence;  // p x p share of samples with z_i == z_j
};

IndexSummary index_summary(const ChainArchive& archive);

// p x p co-clustering frequencies for a bag of labelings.
Eigen::MatrixXd cooccurrence_matrix(const std::vector<std::vector<int>>& labelings);

}  // namespace hpi
