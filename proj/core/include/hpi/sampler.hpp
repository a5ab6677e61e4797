#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "hpi/kalman.hpp"
#include "hpi/panel.hpp"
#include "hpi/rng.hpp"

namespace hpi {

// Sampled hyperparameters plus the fixed prior constants they hang off.
struct HyperParams {
  // Resampled each sweep:
  double mu_lambda = 0.0;
  double sigma_lambda_sq = 1.0;
  double mu_a = 0.0;
  double sigma_a_sq = 1.0;
  Eigen::VectorXd mu_h;        // H
  Eigen::VectorXd sigma_h_sq;  // H

  // Fixed inverse-gamma constants:
  double alpha_eps0 = 0.5, beta_eps0 = 1.0;  // sigma0_sq prior
  double alpha_R0 = 3.0, beta_R0 = 1.0;      // R_i prior

  // Fixed top-level constants:
  double mu_lambda0 = 0.0, sigma_lambda0_sq = 100.0;
  double mu_a0 = 0.0, sigma_a0_sq = 100.0;
  double mu_h0 = 0.0, sigma_h0_sq = 100.0;
  double alpha_lambda0 = 2.0, beta_lambda0 = 1.0;
  double alpha_a0 = 2.0, beta_a0 = 1.0;
  double alpha_h0 = 2.0, beta_h0 = 1.0;
  double alpha_alpha = 1.0, beta_alpha = 1.0;  // DP concentration prior

  // Fixed initial-state prior variance (diagonal, parameter independent so
  // the conjugate conditionals stay exact).
  double init_state_var = 4.0;

  static HyperParams defaults(int H);
  void validate() const;
};

// One full MCMC state. Time-indexed matrices store one column per month;
// x_init is the pre-panel state that seeds the AR recursion, so the month-t
// innovation is x(:,t) - a .* x(:,t-1) with x(:,-1) = x_init.
struct ModelState {
  std::vector<int> z;      // p cluster labels, contiguous 0..K-1
  int K = 0;
  Eigen::MatrixXd x;       // p x T latent states
  Eigen::VectorXd x_init;  // p
  Eigen::MatrixXd eta;     // K x T cluster factors
  Eigen::VectorXd lambda;  // p active loadings lambda_{i, z_i}
  Eigen::VectorXd a;       // p AR coefficients
  Eigen::VectorXd R;       // p observation variances
  Eigen::MatrixXd beta;    // p x H hedonic coefficients
  double sigma0_sq = 1.0;
  HyperParams hyper;
  double alpha = 1.0;

  int p() const { return static_cast<int>(z.size()); }
  int T() const { return static_cast<int>(x.cols()); }
  int H() const { return static_cast<int>(beta.cols()); }

  std::vector<std::vector<int>> clusters() const;
  // Cluster view under the current parameters for the given member set.
  ClusterView view_of(const std::vector<int>& members) const;
};

// Deterministic starting state: singleton clusters, loadings and AR
// coefficients drawn around the hyper means.
ModelState make_initial_state(const StreamPanel& panel, const HyperParams& hyper,
                              Rng& rng);

// Full joint prior draw (used by prior-reproduction tests).
ModelState draw_state_from_prior(const StreamPanel& panel, const HyperParams& hyper,
                                 Rng& rng);

// Replaces every observation y with a draw from the emission model given
// the state's x, beta, R (hedonics and counts unchanged), then refreshes
// the sufficient statistics against state.beta.
void resimulate_observations(StreamPanel& panel, const ModelState& state, Rng& rng);

// --- Gibbs steps -----------------------------------------------------------

// Collapsed assignment update: latent states and factors are marginalized
// through the filters (this function has no access to x or eta). Regions
// are visited in a seeded random permutation. `concentration` defaults to
// state.alpha; the parallel engine passes alpha/P.
void sample_z(ModelState& state, const StreamPanel& panel, Rng& rng,
              double concentration = -1.0);

// Block-imputes x (per cluster, FFBS with eta marginalized) and then eta
// given x (independent scalars per cluster-month).
void sample_x_eta(ModelState& state, const StreamPanel& panel, Rng& rng);

// The eta | x half of the block update, exposed for conditional checks:
// V = [I_K + (Lambda.Z)'(Lambda.Z)/sigma0_sq]^{-1} (diagonal across
// clusters), mean = V (Lambda.Z)'(x_t - A x_{t-1}) / sigma0_sq.
void sample_eta_given_x(ModelState& state, Rng& rng);

void sample_lambda(ModelState& state, Rng& rng);
void sample_a(ModelState& state, Rng& rng);
void sample_R(ModelState& state, const StreamPanel& panel, Rng& rng);
// Updates beta and refreshes the panel sufficient statistics afterwards.
void sample_beta(ModelState& state, StreamPanel& panel, Rng& rng);
void sample_sigma0(ModelState& state, Rng& rng);
void sample_hyperparams(ModelState& state, Rng& rng);
// Escobar-West auxiliary update for the DP concentration.
void sample_alpha(ModelState& state, Rng& rng);

// Mixture weight of the two-gamma representation: pi/(1-pi) =
// (alpha_alpha + K - 1) / (p * (beta_alpha - log kappa)).
double concentration_mixture_weight(double alpha_alpha, int K, int p,
                                    double beta_alpha, double log_kappa);

// Normalized predictive masses of the collapsed partition prior given the
// occupied cluster sizes (entries 0..K-1) and the new-cluster slot (last
// entry): n_k / (n - 1 + alpha) and alpha / (n - 1 + alpha).
std::vector<double> crp_prior_masses(const std::vector<int>& sizes, double alpha);

struct SweepOptions {
  bool sample_assignments = true;   // false freezes clusters (no-clustering variant)
  bool sample_concentration = true;
  bool sample_hypers = true;
};

// One full sweep: assignments (collapsed) -> impute x, eta -> lambda, a,
// R, beta, sigma0_sq -> hyperparameters -> concentration. Any sub-step
// error rolls the state (and panel suff stats) back to the pre-sweep
// snapshot and rethrows.
void gibbs_sweep(ModelState& state, StreamPanel& panel, Rng& rng,
                 const SweepOptions& opts = {});

// Throws on violated invariants (contiguous non-empty labels, positive
// variances, consistent shapes).
void check_state_invariants(const ModelState& state, const StreamPanel& panel);

// Checkpoint-grade JSON round trip.
std::string state_to_json(const ModelState& state);
ModelState state_from_json(const std::string& json_text);

}  // namespace hpi
