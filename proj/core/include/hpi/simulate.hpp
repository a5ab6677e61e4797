#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "hpi/panel.hpp"
#include "hpi/rng.hpp"

namespace hpi {

// Synthetic-panel scenario. Per-cell observation counts default to a
// negative-binomial profile (mean obs_mean, dispersion obs_dispersion)
// matching the sparse regime the model targets; fixed_counts overrides it.
struct ScenarioConfig {
  int p = 20;
  int T = 213;
  int H = 3;
  std::vector<int> cluster_sizes = {4, 4, 4, 8};
  double mu_a = 0.99;
  double sigma_a_sq = 1e-4;
  double mu_lambda = 0.15;
  double sigma_lambda_sq = 2.5e-3;
  double sigma0_sq = 1e-3;
  double R_lo = 0.2, R_hi = 0.3;          // per-stream observation variance range
  double beta_sd = 0.5;                   // hedonic effects ~ N(0, beta_sd^2)
  double obs_mean = 3.0;
  double obs_dispersion = 1.0;
  std::optional<int> fixed_counts;        // same count for every cell
  double hedonic_log_mean = 0.0;          // hedonics ~ LogNormal
  double hedonic_log_sd = 0.5;
  std::uint64_t seed = 1;

  void validate() const;
};

struct GroundTruth {
  std::vector<int> z_true;
  Eigen::MatrixXd x_true;      // p x T
  Eigen::VectorXd x_init_true; // p
  Eigen::MatrixXd eta_true;    // K x T
  Eigen::VectorXd lambda_true;
  Eigen::VectorXd a_true;
  Eigen::MatrixXd beta_true;   // p x H
  Eigen::VectorXd R_true;
  double sigma0_true = 0.0;
};

// Draws stream parameters around the scenario means, latent factors and
// states from the dynamics (streams start at the stationary idiosyncratic
// marginal, AR coefficients clipped at a^2 <= 0.9999 for that draw only),
// then observations through the emission model. Deterministic given the
// seed.
std::pair<StreamPanel, GroundTruth> simulate_panel(const ScenarioConfig& cfg);

// Held-out observations in panel (detrended) units.
struct TestObs {
  int region = 0;
  int month = 0;
  double y = 0.0;
  Eigen::VectorXd u;
};
struct TestSet {
  std::vector<TestObs> obs;
};

// Per-region stratified split of individual observations; round(fraction*m_i)
// per region go to the test set.
std::pair<StreamPanel, TestSet> holdout_split(const StreamPanel& panel,
                                              double fraction, Rng& rng);

}  // namespace hpi
