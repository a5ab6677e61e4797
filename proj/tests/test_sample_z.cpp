#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "hpi/evaluate.hpp"
#include "hpi/sampler.hpp"
#include "hpi/simulate.hpp"
#include "support/oracles.hpp"

using namespace hpi;

namespace {

// State over an empty panel: every assignment likelihood is zero, so the
// chain explores the partition prior alone.
ModelState empty_panel_state(const StreamPanel& panel, double alpha) {
  ModelState s;
  s.hyper = HyperParams::defaults(panel.H);
  const int p = panel.p;
  s.z.assign(p, 0);
  for (int i = 0; i < p; ++i) s.z[i] = i;
  s.K = p;
  s.x = Eigen::MatrixXd::Zero(p, panel.T);
  s.x_init = Eigen::VectorXd::Zero(p);
  s.eta = Eigen::MatrixXd::Zero(p, panel.T);
  s.lambda = Eigen::VectorXd::Constant(p, 0.2);
  s.a = Eigen::VectorXd::Constant(p, 0.5);
  s.R = Eigen::VectorXd::Constant(p, 0.5);
  s.beta = Eigen::MatrixXd::Zero(p, panel.H);
  s.sigma0_sq = 0.5;
  s.alpha = alpha;
  return s;
}

}  // namespace

TEST_CASE("partition prior masses: sizes {2, 1} with alpha 1") {
  const auto masses = crp_prior_masses({2, 1}, 1.0);
  REQUIRE(masses.size() == 3);
  CHECK(masses[0] == doctest::Approx(2.0 / 4.0));
  CHECK(masses[1] == doctest::Approx(1.0 / 4.0));
  CHECK(masses[2] == doctest::Approx(1.0 / 4.0));
}

TEST_CASE("vanishing concentration kills new clusters") {
  auto panel = build_panel(3, 1, 0, {});
  ModelState s = empty_panel_state(panel, 1e-12);
  Rng rng(501);
  for (int k = 0; k < 100; ++k) sample_z(s, panel, rng);
  CHECK(s.K == 1);  // everything merged
  for (int k = 0; k < 5000; ++k) {
    sample_z(s, panel, rng);
    REQUIRE(s.K == 1);
  }
}

TEST_CASE("empty-panel chain matches exact partition prior probabilities") {
  auto panel = build_panel(3, 1, 0, {});
  ModelState s = empty_panel_state(panel, 1.0);
  Rng rng(502);
  std::map<std::vector<int>, double> freq;
  const int sweeps = 100000;
  for (int k = 0; k < sweeps; ++k) {
    sample_z(s, panel, rng);
    freq[test::canonical_labels(s.z)] += 1.0;
  }
  const auto exact = test::crp_partition_probs(3, 1.0);
  // all together 1/3; all apart 1/6; each pairing 1/6.
  CHECK(exact.at({0, 0, 0}) == doctest::Approx(1.0 / 3.0));
  CHECK(exact.at({0, 1, 2}) == doctest::Approx(1.0 / 6.0));
  CHECK(exact.at({0, 0, 1}) == doctest::Approx(1.0 / 6.0));
  for (const auto& [part, prob] : exact)
    CHECK(std::abs(freq[part] / sweeps - prob) < 0.02);
}

TEST_CASE("dominant shared factor glues two streams together") {
  ScenarioConfig sc;
  sc.p = 2;
  sc.T = 100;
  sc.H = 0;
  sc.cluster_sizes = {2};
  sc.mu_lambda = 3.0;
  sc.sigma_lambda_sq = 1e-4;
  sc.sigma0_sq = 0.01;
  sc.mu_a = 0.5;
  sc.sigma_a_sq = 1e-4;
  sc.R_lo = 0.2;
  sc.R_hi = 0.3;
  sc.fixed_counts = 1;
  sc.seed = 503;
  auto [panel, truth] = simulate_panel(sc);

  StreamPanel work = panel;
  FitOptions opts;
  opts.iterations = 700;
  opts.burn_in = 200;
  opts.thinning = 1;
  opts.hyper = HyperParams::defaults(0);
  const auto result = run_chain(work, opts, 504);
  int together = 0;
  for (const auto& smp : result.samples)
    if (smp.z[0] == smp.z[1]) ++together;
  CHECK(together > 0.95 * static_cast<double>(result.samples.size()));
}

TEST_CASE("assignments never read the latent states or factors") {
  Rng maker(505);
  ScenarioConfig sc;
  sc.p = 4;
  sc.T = 12;
  sc.H = 0;
  sc.cluster_sizes = {2, 2};
  sc.seed = 506;
  auto [panel, truth] = simulate_panel(sc);

  ModelState s = empty_panel_state(panel, 1.0);
  s.lambda = truth.lambda_true;
  s.a = truth.a_true;
  s.R = truth.R_true;
  refresh_suffstats(panel, s.beta);

  ModelState poisoned = s;
  poisoned.x.setConstant(std::numeric_limits<double>::quiet_NaN());
  poisoned.eta.setConstant(std::numeric_limits<double>::quiet_NaN());
  poisoned.x_init.setConstant(std::numeric_limits<double>::quiet_NaN());

  Rng r1(507), r2(507);
  sample_z(s, panel, r1);
  sample_z(poisoned, panel, r2);
  CHECK(s.z == poisoned.z);
  CHECK(s.K == poisoned.K);
}

TEST_CASE("label permutation does not change the law (co-clustering)") {
  ScenarioConfig sc;
  sc.p = 6;
  sc.T = 40;
  sc.H = 0;
  sc.cluster_sizes = {3, 3};
  sc.mu_lambda = 0.8;
  sc.sigma_lambda_sq = 0.01;
  sc.sigma0_sq = 0.02;
  sc.mu_a = 0.7;
  sc.seed = 508;
  auto [panel, truth] = simulate_panel(sc);

  auto run_from = [&](const std::vector<int>& z0, std::uint64_t seed) {
    StreamPanel work = panel;
    ModelState s = empty_panel_state(work, 1.0);
    s.z = z0;
    s.K = 1 + *std::max_element(z0.begin(), z0.end());
    s.eta = Eigen::MatrixXd::Zero(s.K, work.T);
    s.lambda = truth.lambda_true;
    s.a = truth.a_true;
    s.R = truth.R_true;
    s.sigma0_sq = truth.sigma0_true;
    refresh_suffstats(work, s.beta);
    Rng rng(seed);
    std::vector<std::vector<int>> labelings;
    for (int k = 0; k < 3000; ++k) {
      gibbs_sweep(s, work, rng);
      if (k >= 500) labelings.push_back(s.z);
    }
    return cooccurrence_matrix(labelings);
  };

  // Same starting partition up to a label permutation.
  const auto c1 = run_from({0, 0, 1, 1, 2, 2}, 509);
  const auto c2 = run_from({2, 2, 0, 0, 1, 1}, 510);
  CHECK((c1 - c2).cwiseAbs().maxCoeff() < 0.06);
}
