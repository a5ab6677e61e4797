#include "hpi/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hpi/errors.hpp"

namespace hpi {

void ScenarioConfig::validate() const {
  if (p < 1 || T < 1 || H < 0) throw ConfigError("scenario: p, T must be >= 1");
  int sum = 0;
  for (int s : cluster_sizes) {
    if (s < 1) throw ConfigError("scenario: cluster sizes must be >= 1");
    sum += s;
  }
  if (sum != p) throw ConfigError("scenario: cluster_sizes must sum to p");
  if (!std::isfinite(mu_a) || !std::isfinite(mu_lambda))
    throw ConfigError("scenario: means must be finite");
  if (!(sigma0_sq > 0.0) || !(sigma_a_sq >= 0.0) || !(sigma_lambda_sq >= 0.0))
    throw ConfigError("scenario: variances must be positive");
  if (!(R_lo > 0.0) || R_hi < R_lo) throw ConfigError("scenario: bad R range");
  if (fixed_counts && *fixed_counts < 0)
    throw ConfigError("scenario: fixed_counts must be >= 0");
}

std::pair<StreamPanel, GroundTruth> simulate_panel(const ScenarioConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const int p = cfg.p, T = cfg.T, H = cfg.H;
  const int K = static_cast<int>(cfg.cluster_sizes.size());

  GroundTruth truth;
  truth.z_true.resize(p);
  {
    int i = 0;
    for (int k = 0; k < K; ++k)
      for (int s = 0; s < cfg.cluster_sizes[k]; ++s) truth.z_true[i++] = k;
  }

  truth.a_true.resize(p);
  truth.lambda_true.resize(p);
  truth.R_true.resize(p);
  truth.beta_true.resize(p, H);
  for (int i = 0; i < p; ++i) {
    truth.a_true(i) = rng.normal(cfg.mu_a, std::sqrt(cfg.sigma_a_sq));
    truth.lambda_true(i) = rng.normal(cfg.mu_lambda, std::sqrt(cfg.sigma_lambda_sq));
    truth.R_true(i) = rng.uniform(cfg.R_lo, cfg.R_hi);
    for (int h = 0; h < H; ++h) truth.beta_true(i, h) = rng.normal(0.0, cfg.beta_sd);
  }
  truth.sigma0_true = cfg.sigma0_sq;

  truth.eta_true.resize(K, T);
  for (int k = 0; k < K; ++k)
    for (int t = 0; t < T; ++t) truth.eta_true(k, t) = rng.normal();

  // States start at the stationary idiosyncratic marginal.
  truth.x_init_true.resize(p);
  truth.x_true.resize(p, T);
  const double sd0 = std::sqrt(cfg.sigma0_sq);
  for (int i = 0; i < p; ++i) {
    const double a2 = std::min(truth.a_true(i) * truth.a_true(i), 0.9999);
    truth.x_init_true(i) = rng.normal(0.0, std::sqrt(cfg.sigma0_sq / (1.0 - a2)));
    double prev = truth.x_init_true(i);
    for (int t = 0; t < T; ++t) {
      truth.x_true(i, t) = truth.a_true(i) * prev +
                           truth.lambda_true(i) * truth.eta_true(truth.z_true[i], t) +
                           rng.normal(0.0, sd0);
      prev = truth.x_true(i, t);
    }
  }

  std::vector<RawObs> obs;
  for (int i = 0; i < p; ++i) {
    const double obs_sd = std::sqrt(truth.R_true(i));
    for (int t = 0; t < T; ++t) {
      const int L = cfg.fixed_counts
                        ? *cfg.fixed_counts
                        : rng.negative_binomial(cfg.obs_mean, cfg.obs_dispersion);
      for (int l = 0; l < L; ++l) {
        Eigen::VectorXd u(H);
        for (int h = 0; h < H; ++h)
          u(h) = std::exp(rng.normal(cfg.hedonic_log_mean, cfg.hedonic_log_sd));
        const double mean = truth.x_true(i, t) + truth.beta_true.row(i).dot(u);
        obs.push_back({i, t, rng.normal(mean, obs_sd), std::move(u)});
      }
    }
  }
  return {build_panel(p, T, H, obs), std::move(truth)};
}

std::pair<StreamPanel, TestSet> holdout_split(const StreamPanel& panel,
                                              double fraction, Rng& rng) {
  if (fraction < 0.0 || fraction > 1.0)
    throw ConfigError("holdout_split: fraction must be in [0, 1]");
  std::vector<RawObs> train;
  TestSet test;
  for (int i = 0; i < panel.p; ++i) {
    // Collect the region's observations, shuffle, take the tail as test.
    std::vector<RawObs> mine;
    for (int t = 0; t < panel.T; ++t) {
      const Cell& c = panel.cell(i, t);
      for (int l = 0; l < c.count(); ++l) mine.push_back({i, t, c.y[l], c.u[l]});
    }
    for (int k = static_cast<int>(mine.size()) - 1; k > 0; --k)
      std::swap(mine[k], mine[rng.uniform_index(k + 1)]);
    const int n_test = static_cast<int>(
        std::llround(fraction * static_cast<double>(mine.size())));
    for (std::size_t k = 0; k < mine.size(); ++k) {
      if (static_cast<int>(k) < n_test)
        test.obs.push_back({mine[k].region, mine[k].month, mine[k].y, mine[k].u});
      else
        train.push_back(std::move(mine[k]));
    }
  }
  StreamPanel train_panel =
      build_panel(panel.p, panel.T, panel.H, train, panel.region_ids, panel.scale);
  return {std::move(train_panel), std::move(test)};
}

}  // namespace hpi
