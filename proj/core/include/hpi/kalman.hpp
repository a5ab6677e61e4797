#pragma once

#include <Eigen/Dense>
#include <vector>

#include "hpi/panel.hpp"
#include "hpi/rng.hpp"

namespace hpi {

// Parameters of one cluster of streams, aligned with `members` (global
// region indices into the panel). The implied innovation covariance is
// Q = lambda lambda' + sigma0_sq I: off-diagonal lambda_i lambda_j,
// diagonal lambda_i^2 + sigma0_sq.
struct ClusterView {
  std::vector<int> members;
  Eigen::VectorXd a;       // AR coefficients
  Eigen::VectorXd lambda;  // factor loadings
  double sigma0_sq = 0.0;  // idiosyncratic innovation variance
  Eigen::VectorXd R;       // per-member observation variances
  Eigen::MatrixXd beta;    // p_k x H hedonic coefficients

  int size() const { return static_cast<int>(members.size()); }
  Eigen::MatrixXd Q() const;
};

struct InitialStatePrior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// Diagonal prior N(0, var I) sized for the view.
InitialStatePrior default_init(const ClusterView& view, double var);

// Filter trajectories. Time-indexed matrices store one column per month
// (p_k x T); V_filt/V_pred hold one p_k x p_k matrix per month. Column t of
// mu_pred / V_pred[t] is the one-step predictive for month t given months
// before it.
struct FilterResult {
  double loglik = 0.0;
  Eigen::MatrixXd mu_filt, mu_pred;
  std::vector<Eigen::MatrixXd> V_filt, V_pred;
};

// Joint draw of the latent states: x_init is the pre-panel state the
// filter prior refers to, x holds one column per panel month (p_k x T).
struct StateDraw {
  Eigen::VectorXd x_init;
  Eigen::MatrixXd x;
};

// Kalman filter over the individual observations: each sale contributes
// one row of the time-varying observation matrix, with its hedonic offset
// beta_i'u in the mean and R_i on the noise diagonal. Months with no
// observations skip the update. loglik is the exact marginal
// log-likelihood of all observations in the cluster.
FilterResult filter_naive(const ClusterView& view, const StreamPanel& panel,
                          const InitialStatePrior& init);
double marginal_loglik_naive(const ClusterView& view, const StreamPanel& panel,
                             const InitialStatePrior& init);

// Sufficient-statistic filter: the observation at month t is the vector of
// cell means psi_bar restricted to members with L > 0, with noise
// R_i / L_{t,i}. Requires panel suff stats refreshed against view.beta.
// loglik includes suffstat_correction so it matches filter_naive.
FilterResult filter_suffstat(const ClusterView& view, const StreamPanel& panel,
                             const InitialStatePrior& init);
double marginal_loglik_suffstat(const ClusterView& view, const StreamPanel& panel,
                                const InitialStatePrior& init);

// Within-cell residual term that converts the likelihood of the cell means
// into the likelihood of the individual observations:
//   -1/2 sum_{i,t: L>0} [(L-1) log(2 pi R_i) + log L + (sum psi^2 - L psi_bar^2)/R_i].
double suffstat_correction(const ClusterView& view, const StreamPanel& panel);

// Exact conditional log-likelihood of member `local_index`'s stream given
// the other streams in the cluster: marginal(with) - marginal(without),
// both via the corrected sufficient-statistic filter.
double stream_conditional_loglik(const ClusterView& view_with_i, int local_index,
                                 const StreamPanel& panel,
                                 const InitialStatePrior& init_with,
                                 const InitialStatePrior& init_without);
double stream_conditional_loglik(const ClusterView& view_with_i, int local_index,
                                 const StreamPanel& panel, double init_var);

// Marginal log-likelihood of stream i forming a singleton cluster with a
// freshly drawn loading (innovation variance lambda_new^2 + sigma0_sq).
double new_cluster_loglik(int region, double a_i, double lambda_new,
                          double sigma0_sq, double R_i,
                          const Eigen::VectorXd& beta_row,
                          const StreamPanel& panel, double init_var);

// Forward filter (sufficient-statistic form), backward sampling including
// the pre-panel initial state. Deterministic given the rng state.
StateDraw ffbs(const ClusterView& view, const StreamPanel& panel,
               const InitialStatePrior& init, Rng& rng);

}  // namespace hpi
