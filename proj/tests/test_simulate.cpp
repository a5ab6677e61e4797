#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "hpi/errors.hpp"
#include "hpi/simulate.hpp"
#include "support/oracles.hpp"

using namespace hpi;

TEST_CASE("default shape comes out as configured") {
  ScenarioConfig sc;
  sc.seed = 801;
  auto [panel, truth] = simulate_panel(sc);
  CHECK(panel.p == 20);
  CHECK(panel.T == 213);
  CHECK(panel.H == 3);
  CHECK(truth.x_true.rows() == 20);
  CHECK(truth.x_true.cols() == 213);
  CHECK(truth.eta_true.rows() == 4);
  CHECK(truth.z_true[0] == 0);
  CHECK(truth.z_true[4] == 1);
  CHECK(truth.z_true[12] == 3);
}

TEST_CASE("same seed gives bit-identical panels") {
  ScenarioConfig sc;
  sc.p = 6;
  sc.T = 24;
  sc.cluster_sizes = {3, 3};
  sc.seed = 802;
  auto [p1, t1] = simulate_panel(sc);
  auto [p2, t2] = simulate_panel(sc);
  CHECK((t1.x_true - t2.x_true).cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < p1.p; ++i)
    for (int t = 0; t < p1.T; ++t) {
      REQUIRE(p1.cell(i, t).count() == p2.cell(i, t).count());
      for (int l = 0; l < p1.cell(i, t).count(); ++l)
        CHECK(p1.cell(i, t).y[l] == p2.cell(i, t).y[l]);
    }
}

TEST_CASE("cluster sizes must sum to p") {
  ScenarioConfig sc;
  sc.p = 5;
  sc.cluster_sizes = {2, 2};
  CHECK_THROWS_AS(simulate_panel(sc), ConfigError);
}

TEST_CASE("degenerate scenario: no dynamics, pure hedonics plus noise") {
  ScenarioConfig sc;
  sc.p = 4;
  sc.T = 10;
  sc.H = 1;
  sc.cluster_sizes = {4};
  sc.mu_a = 0.0;
  sc.sigma_a_sq = 0.0;
  sc.mu_lambda = 0.0;
  sc.sigma_lambda_sq = 0.0;
  sc.sigma0_sq = 1e-300;
  sc.fixed_counts = 2;
  sc.seed = 803;
  auto [panel, truth] = simulate_panel(sc);
  CHECK(truth.x_true.cwiseAbs().maxCoeff() < 1e-100);
  // Observations are then centered on the hedonic term alone.
  for (int i = 0; i < panel.p; ++i)
    for (int t = 0; t < panel.T; ++t) {
      const Cell& c = panel.cell(i, t);
      for (int l = 0; l < c.count(); ++l) {
        const double centered = c.y[l] - truth.beta_true.row(i).dot(c.u[l]);
        CHECK(std::abs(centered) < 4.0 * std::sqrt(truth.R_true(i)) * 3);
      }
    }
}

TEST_CASE("innovation covariance matches the factor structure on average") {
  // Mean of the empirical innovation covariance across seeds, compared
  // entrywise; a single T=213 realization carries ~10% noise on the factor
  // component, so the check averages 20 seeds.
  ScenarioConfig sc;
  sc.p = 8;
  sc.T = 213;
  sc.H = 0;
  sc.cluster_sizes = {8};
  sc.mu_lambda = 0.6;
  sc.sigma_lambda_sq = 0.0;  // fixed loadings: Q is exactly known
  sc.sigma0_sq = 0.05;
  sc.mu_a = 0.8;
  sc.sigma_a_sq = 0.0;
  sc.fixed_counts = 0;

  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(8, 8);
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    sc.seed = 804 + s;
    auto [panel, truth] = simulate_panel(sc);
    Eigen::MatrixXd innov(8, sc.T);
    for (int i = 0; i < 8; ++i)
      for (int t = 0; t < sc.T; ++t) {
        const double prev = (t == 0) ? truth.x_init_true(i) : truth.x_true(i, t - 1);
        innov(i, t) = truth.x_true(i, t) - truth.a_true(i) * prev;
      }
    const Eigen::MatrixXd centered =
        innov.colwise() - innov.rowwise().mean();
    acc += centered * centered.transpose() / (sc.T - 1);
  }
  acc /= seeds;
  const double lam = 0.6;
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      const double expect = lam * lam + (i == j ? 0.05 : 0.0);
      CHECK(std::abs(acc(i, j) - expect) < 0.10 * expect);
    }
}

TEST_CASE("positive within-cluster innovation correlation in most seeds") {
  ScenarioConfig sc;
  sc.p = 8;
  sc.T = 213;
  sc.H = 0;
  sc.cluster_sizes = {4, 4};
  sc.mu_lambda = 0.15;
  sc.sigma_lambda_sq = 2.5e-3;
  sc.sigma0_sq = 1e-3;
  sc.fixed_counts = 0;
  int positive = 0;
  const int seeds = 40;
  for (int s = 0; s < seeds; ++s) {
    sc.seed = 900 + s;
    auto [panel, truth] = simulate_panel(sc);
    double mean_corr = 0.0;
    int pairs = 0;
    for (int k = 0; k < 2; ++k) {
      for (int i = 4 * k; i < 4 * (k + 1); ++i)
        for (int j = i + 1; j < 4 * (k + 1); ++j) {
          Eigen::VectorXd ei(sc.T), ej(sc.T);
          for (int t = 0; t < sc.T; ++t) {
            const double pi = (t == 0) ? truth.x_init_true(i) : truth.x_true(i, t - 1);
            const double pj = (t == 0) ? truth.x_init_true(j) : truth.x_true(j, t - 1);
            ei(t) = truth.x_true(i, t) - truth.a_true(i) * pi;
            ej(t) = truth.x_true(j, t) - truth.a_true(j) * pj;
          }
          ei.array() -= ei.mean();
          ej.array() -= ej.mean();
          mean_corr += ei.dot(ej) / std::sqrt(ei.squaredNorm() * ej.squaredNorm());
          ++pairs;
        }
    }
    if (mean_corr / pairs > 0.0) ++positive;
  }
  CHECK(positive >= static_cast<int>(0.95 * seeds));
}

TEST_CASE("holdout: zero fraction keeps everything in training") {
  ScenarioConfig sc;
  sc.p = 3;
  sc.T = 12;
  sc.cluster_sizes = {3};
  sc.seed = 805;
  auto [panel, truth] = simulate_panel(sc);
  Rng rng(806);
  auto [train, test] = holdout_split(panel, 0.0, rng);
  CHECK(test.obs.empty());
  CHECK(train.total_obs_count() == panel.total_obs_count());
}

TEST_CASE("holdout: quarter split is stratified per region") {
  ScenarioConfig sc;
  sc.p = 4;
  sc.T = 25;
  sc.H = 0;
  sc.cluster_sizes = {4};
  sc.fixed_counts = 4;  // 100 observations per region
  sc.seed = 807;
  auto [panel, truth] = simulate_panel(sc);
  Rng rng(808);
  auto [train, test] = holdout_split(panel, 0.25, rng);
  std::vector<int> test_count(4, 0);
  for (const auto& o : test.obs) test_count[o.region] += 1;
  for (int i = 0; i < 4; ++i) {
    CHECK(std::abs(test_count[i] - 25) <= 1);
    CHECK(train.region_obs_count(i) + test_count[i] == 100);
  }
}

TEST_CASE("holdout: train and test reunite into the original multiset") {
  ScenarioConfig sc;
  sc.p = 3;
  sc.T = 10;
  sc.H = 1;
  sc.cluster_sizes = {3};
  sc.seed = 809;
  auto [panel, truth] = simulate_panel(sc);
  Rng rng(810);
  auto [train, test] = holdout_split(panel, 0.4, rng);
  for (int i = 0; i < panel.p; ++i) {
    std::multiset<double> original, reunited;
    for (int t = 0; t < panel.T; ++t)
      for (double y : panel.cell(i, t).y) original.insert(y);
    for (int t = 0; t < panel.T; ++t)
      for (double y : train.cell(i, t).y) reunited.insert(y);
    for (const auto& o : test.obs)
      if (o.region == i) reunited.insert(o.y);
    CHECK(original == reunited);
  }
}
