#include "hpi/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "hpi/errors.hpp"
#include "hpi/math.hpp"

namespace hpi {

using nlohmann::json;

HyperParams HyperParams::defaults(int H) {
  HyperParams h;
  h.mu_h = Eigen::VectorXd::Zero(H);
  h.sigma_h_sq = Eigen::VectorXd::Ones(H);
  return h;
}

void HyperParams::validate() const {
  auto pos = [](double v, const char* name) {
    if (!(v > 0.0))
      throw ConfigError(std::string("HyperParams: ") + name + " must be positive");
  };
  pos(sigma_lambda_sq, "sigma_lambda_sq");
  pos(sigma_a_sq, "sigma_a_sq");
  for (int h = 0; h < sigma_h_sq.size(); ++h) pos(sigma_h_sq(h), "sigma_h_sq");
  pos(alpha_eps0, "alpha_eps0");
  pos(beta_eps0, "beta_eps0");
  pos(alpha_R0, "alpha_R0");
  pos(beta_R0, "beta_R0");
  pos(sigma_lambda0_sq, "sigma_lambda0_sq");
  pos(sigma_a0_sq, "sigma_a0_sq");
  pos(sigma_h0_sq, "sigma_h0_sq");
  pos(alpha_lambda0, "alpha_lambda0");
  pos(beta_lambda0, "beta_lambda0");
  pos(alpha_a0, "alpha_a0");
  pos(beta_a0, "beta_a0");
  pos(alpha_h0, "alpha_h0");
  pos(beta_h0, "beta_h0");
  pos(alpha_alpha, "alpha_alpha");
  pos(beta_alpha, "beta_alpha");
  pos(init_state_var, "init_state_var");
}

std::vector<std::vector<int>> ModelState::clusters() const {
  std::vector<std::vector<int>> out(K);
  for (int i = 0; i < p(); ++i) {
    if (z[i] < 0 || z[i] >= K) throw DataError("ModelState: label out of range");
    out[z[i]].push_back(i);
  }
  return out;
}

ClusterView ModelState::view_of(const std::vector<int>& members) const {
  const int n = static_cast<int>(members.size());
  ClusterView v;
  v.members = members;
  v.a.resize(n);
  v.lambda.resize(n);
  v.R.resize(n);
  v.beta.resize(n, H());
  v.sigma0_sq = sigma0_sq;
  for (int j = 0; j < n; ++j) {
    const int i = members[j];
    v.a(j) = a(i);
    v.lambda(j) = lambda(i);
    v.R(j) = R(i);
    v.beta.row(j) = beta.row(i);
  }
  return v;
}

ModelState make_initial_state(const StreamPanel& panel, const HyperParams& hyper,
                              Rng& rng) {
  hyper.validate();
  if (hyper.mu_h.size() != panel.H || hyper.sigma_h_sq.size() != panel.H)
    throw DimensionError("make_initial_state: hyper hedonic dimension mismatch");
  ModelState s;
  s.hyper = hyper;
  const int p = panel.p;
  s.z.resize(p);
  std::iota(s.z.begin(), s.z.end(), 0);
  s.K = p;
  s.x = Eigen::MatrixXd::Zero(p, panel.T);
  s.x_init = Eigen::VectorXd::Zero(p);
  s.eta = Eigen::MatrixXd::Zero(p, panel.T);
  s.lambda.resize(p);
  s.a.resize(p);
  for (int i = 0; i < p; ++i) {
    s.lambda(i) = rng.normal(hyper.mu_lambda, std::sqrt(hyper.sigma_lambda_sq));
    s.a(i) = rng.normal(0.5, 0.2);
  }
  s.R = Eigen::VectorXd::Constant(p, 0.5);
  s.beta = Eigen::MatrixXd::Zero(p, panel.H);
  s.sigma0_sq = 0.1;
  s.alpha = 1.0;
  return s;
}

ModelState draw_state_from_prior(const StreamPanel& panel, const HyperParams& hyper,
                                 Rng& rng) {
  hyper.validate();
  ModelState s;
  s.hyper = hyper;
  const int p = panel.p;
  const int T = panel.T;
  const int H = panel.H;

  s.hyper.mu_lambda = rng.normal(hyper.mu_lambda0, std::sqrt(hyper.sigma_lambda0_sq));
  s.hyper.sigma_lambda_sq = rng.inverse_gamma(hyper.alpha_lambda0, hyper.beta_lambda0);
  s.hyper.mu_a = rng.normal(hyper.mu_a0, std::sqrt(hyper.sigma_a0_sq));
  s.hyper.sigma_a_sq = rng.inverse_gamma(hyper.alpha_a0, hyper.beta_a0);
  s.hyper.mu_h.resize(H);
  s.hyper.sigma_h_sq.resize(H);
  for (int h = 0; h < H; ++h) {
    s.hyper.mu_h(h) = rng.normal(hyper.mu_h0, std::sqrt(hyper.sigma_h0_sq));
    s.hyper.sigma_h_sq(h) = rng.inverse_gamma(hyper.alpha_h0, hyper.beta_h0);
  }
  s.alpha = rng.gamma(hyper.alpha_alpha, 1.0 / hyper.beta_alpha);

  // Sequential CRP draw of the partition.
  s.z.assign(p, 0);
  std::vector<int> sizes;
  for (int i = 0; i < p; ++i) {
    std::vector<double> logw;
    for (std::size_t k = 0; k < sizes.size(); ++k)
      logw.push_back(std::log(double(sizes[k])));
    logw.push_back(std::log(s.alpha));
    const int k = sample_from_log_weights(logw, rng);
    if (k == static_cast<int>(sizes.size()))
      sizes.push_back(1);
    else
      sizes[k] += 1;
    s.z[i] = k;
  }
  s.K = static_cast<int>(sizes.size());

  s.sigma0_sq = rng.inverse_gamma(hyper.alpha_eps0, hyper.beta_eps0);
  s.lambda.resize(p);
  s.a.resize(p);
  s.R.resize(p);
  s.beta.resize(p, H);
  for (int i = 0; i < p; ++i) {
    s.lambda(i) = rng.normal(s.hyper.mu_lambda, std::sqrt(s.hyper.sigma_lambda_sq));
    s.a(i) = rng.normal(s.hyper.mu_a, std::sqrt(s.hyper.sigma_a_sq));
    s.R(i) = rng.inverse_gamma(hyper.alpha_R0, hyper.beta_R0);
    for (int h = 0; h < H; ++h)
      s.beta(i, h) = rng.normal(s.hyper.mu_h(h), std::sqrt(s.hyper.sigma_h_sq(h)));
  }

  s.eta.resize(s.K, T);
  for (int k = 0; k < s.K; ++k)
    for (int t = 0; t < T; ++t) s.eta(k, t) = rng.normal();
  s.x_init.resize(p);
  const double init_sd = std::sqrt(hyper.init_state_var);
  for (int i = 0; i < p; ++i) s.x_init(i) = rng.normal(0.0, init_sd);
  s.x.resize(p, T);
  const double sd0 = std::sqrt(s.sigma0_sq);
  for (int i = 0; i < p; ++i) {
    double prev = s.x_init(i);
    for (int t = 0; t < T; ++t) {
      s.x(i, t) = s.a(i) * prev + s.lambda(i) * s.eta(s.z[i], t) + rng.normal(0.0, sd0);
      prev = s.x(i, t);
    }
  }
  return s;
}

void resimulate_observations(StreamPanel& panel, const ModelState& state, Rng& rng) {
  if (state.p() != panel.p || state.T() != panel.T || state.H() != panel.H)
    throw DimensionError("resimulate_observations: state/panel shape mismatch");
  std::vector<RawObs> obs;
  for (int i = 0; i < panel.p; ++i) {
    const double sd = std::sqrt(state.R(i));
    for (int t = 0; t < panel.T; ++t) {
      const Cell& c = panel.cell(i, t);
      for (int l = 0; l < c.count(); ++l) {
        const double mean = state.x(i, t) + state.beta.row(i).dot(c.u[l]);
        obs.push_back({i, t, rng.normal(mean, sd), c.u[l]});
      }
    }
  }
  panel = build_panel(panel.p, panel.T, panel.H, obs, panel.region_ids, panel.scale);
  refresh_suffstats(panel, state.beta);
}

// --- assignments (collapsed) -----------------------------------------------

namespace {

// Everything sample_z may see; latent states and factors are excluded by
// construction.
struct AssignmentUpdate {
  std::vector<int>& z;
  Eigen::VectorXd& lambda;
  const Eigen::VectorXd& a;
  const Eigen::VectorXd& R;
  const Eigen::MatrixXd& beta;
  double sigma0_sq;
  double concentration;
  const HyperParams& hyper;

  void run(int& K, const StreamPanel& panel, Rng& rng);
};

void AssignmentUpdate::run(int& K, const StreamPanel& panel, Rng& rng) {
  const int p = static_cast<int>(z.size());
  std::vector<std::vector<int>> clusters(K);
  for (int i = 0; i < p; ++i) clusters[z[i]].push_back(i);

  // Marginal log-likelihood of each cluster without the region being
  // updated; recomputed lazily when membership changes.
  std::vector<double> base(K, 0.0);
  std::vector<bool> base_valid(K, false);

  auto make_view = [&](const std::vector<int>& members) {
    const int n = static_cast<int>(members.size());
    ClusterView v;
    v.members = members;
    v.a.resize(n);
    v.lambda.resize(n);
    v.R.resize(n);
    v.beta.resize(n, beta.cols());
    v.sigma0_sq = sigma0_sq;
    for (int j = 0; j < n; ++j) {
      const int m = members[j];
      v.a(j) = a(m);
      v.lambda(j) = lambda(m);
      v.R(j) = R(m);
      v.beta.row(j) = beta.row(m);
    }
    return v;
  };
  auto cluster_loglik = [&](int k) {
    if (!base_valid[k]) {
      const ClusterView v = make_view(clusters[k]);
      base[k] = marginal_loglik_suffstat(v, panel,
                                         default_init(v, hyper.init_state_var));
      base_valid[k] = true;
    }
    return base[k];
  };

  std::vector<int> order(p);
  std::iota(order.begin(), order.end(), 0);
  for (int i = p - 1; i > 0; --i)
    std::swap(order[i], order[rng.uniform_index(i + 1)]);

  const double lambda_sd = std::sqrt(hyper.sigma_lambda_sq);
  for (const int i : order) {
    const int k_old = z[i];
    auto& old_members = clusters[k_old];
    old_members.erase(std::find(old_members.begin(), old_members.end(), i));
    base_valid[k_old] = false;
    const bool was_singleton = old_members.empty();
    int current_cluster = k_old;  // candidate that keeps the active loading
    if (was_singleton) {
      // Delete the emptied cluster; move the last label into its slot.
      current_cluster = -1;
      const int last = K - 1;
      if (k_old != last) {
        clusters[k_old] = std::move(clusters[last]);
        base[k_old] = base[last];
        base_valid[k_old] = base_valid[last];
        for (int m : clusters[k_old]) z[m] = k_old;
      }
      clusters.pop_back();
      base.pop_back();
      base_valid.pop_back();
      --K;
    }

    // One loading per candidate: the region's current cluster (or, for a
    // dissolved singleton, the new-cluster slot) keeps the active loading;
    // every other candidate gets a fresh prior draw.
    std::vector<double> cand_lambda(K + 1);
    for (int k = 0; k < K; ++k)
      cand_lambda[k] = (k == current_cluster)
                           ? lambda(i)
                           : rng.normal(hyper.mu_lambda, lambda_sd);
    cand_lambda[K] = was_singleton ? lambda(i) : rng.normal(hyper.mu_lambda, lambda_sd);

    std::vector<double> logw(K + 1);
    for (int k = 0; k < K; ++k) {
      std::vector<int> members = clusters[k];
      members.push_back(i);
      ClusterView v = make_view(members);
      v.lambda(v.size() - 1) = cand_lambda[k];
      const double joint = marginal_loglik_suffstat(
          v, panel, default_init(v, hyper.init_state_var));
      logw[k] = std::log(double(clusters[k].size())) + joint - cluster_loglik(k);
    }
    logw[K] = std::log(concentration) +
              new_cluster_loglik(i, a(i), cand_lambda[K], sigma0_sq, R(i),
                                 beta.row(i), panel, hyper.init_state_var);

    int choice;
    try {
      choice = sample_from_log_weights(logw, rng);
    } catch (const NumericError&) {
      throw NumericError("sample_z: all assignment weights are -inf for region " +
                         std::to_string(i));
    }
    if (choice == K) {
      clusters.push_back({i});
      base.push_back(0.0);
      base_valid.push_back(false);
      z[i] = K;
      ++K;
    } else {
      clusters[choice].push_back(i);
      base_valid[choice] = false;
      z[i] = choice;
    }
    lambda(i) = cand_lambda[choice];
  }
}

}  // namespace

void sample_z(ModelState& state, const StreamPanel& panel, Rng& rng,
              double concentration) {
  if (concentration <= 0.0) concentration = state.alpha;
  AssignmentUpdate up{state.z,    state.lambda, state.a,      state.R,
                      state.beta, state.sigma0_sq, concentration, state.hyper};
  up.run(state.K, panel, rng);
}

// --- latent states and factors ---------------------------------------------

void sample_x_eta(ModelState& state, const StreamPanel& panel, Rng& rng) {
  const auto clusters = state.clusters();
  for (const auto& members : clusters) {
    const ClusterView v = state.view_of(members);
    const StateDraw draw = ffbs(v, panel, default_init(v, state.hyper.init_state_var), rng);
    for (std::size_t j = 0; j < members.size(); ++j) {
      state.x.row(members[j]) = draw.x.row(static_cast<int>(j));
      state.x_init(members[j]) = draw.x_init(static_cast<int>(j));
    }
  }
  sample_eta_given_x(state, rng);
}

void sample_eta_given_x(ModelState& state, Rng& rng) {
  const int T = state.T();
  const auto clusters = state.clusters();
  // (Lambda.Z)'(Lambda.Z) is diagonal across clusters, so the joint
  // conditional factorizes into scalars per (cluster, month).
  state.eta.resize(state.K, T);
  for (int k = 0; k < state.K; ++k) {
    double load_sq = 0.0;
    for (int i : clusters[k]) load_sq += state.lambda(i) * state.lambda(i);
    const double v_post = 1.0 / (1.0 + load_sq / state.sigma0_sq);
    const double sd_post = std::sqrt(v_post);
    for (int t = 0; t < T; ++t) {
      double proj = 0.0;
      for (int i : clusters[k]) {
        const double prev = (t == 0) ? state.x_init(i) : state.x(i, t - 1);
        proj += state.lambda(i) * (state.x(i, t) - state.a(i) * prev);
      }
      state.eta(k, t) = rng.normal(v_post * proj / state.sigma0_sq, sd_post);
    }
  }
}

// --- per-region parameters --------------------------------------------------

void sample_lambda(ModelState& state, Rng& rng) {
  const int T = state.T();
  const auto& h = state.hyper;
  for (int i = 0; i < state.p(); ++i) {
    const int k = state.z[i];
    double eta_sq = 0.0, cross = 0.0;
    for (int t = 0; t < T; ++t) {
      const double prev = (t == 0) ? state.x_init(i) : state.x(i, t - 1);
      const double eps = state.x(i, t) - state.a(i) * prev;
      eta_sq += state.eta(k, t) * state.eta(k, t);
      cross += eps * state.eta(k, t);
    }
    const double v = 1.0 / (1.0 / h.sigma_lambda_sq + eta_sq / state.sigma0_sq);
    const double mean = v * (h.mu_lambda / h.sigma_lambda_sq + cross / state.sigma0_sq);
    state.lambda(i) = rng.normal(mean, std::sqrt(v));
  }
}

void sample_a(ModelState& state, Rng& rng) {
  const int T = state.T();
  const auto& h = state.hyper;
  for (int i = 0; i < state.p(); ++i) {
    const int k = state.z[i];
    double prev_sq = 0.0, cross = 0.0;
    for (int t = 0; t < T; ++t) {
      const double prev = (t == 0) ? state.x_init(i) : state.x(i, t - 1);
      prev_sq += prev * prev;
      cross += prev * (state.x(i, t) - state.lambda(i) * state.eta(k, t));
    }
    const double v = 1.0 / (1.0 / h.sigma_a_sq + prev_sq / state.sigma0_sq);
    const double mean = v * (h.mu_a / h.sigma_a_sq + cross / state.sigma0_sq);
    state.a(i) = rng.normal(mean, std::sqrt(v));
  }
}

void sample_R(ModelState& state, const StreamPanel& panel, Rng& rng) {
  const auto& h = state.hyper;
  for (int i = 0; i < state.p(); ++i) {
    double rss = 0.0;
    int m_i = 0;
    const Eigen::VectorXd b = state.beta.row(i);
    for (int t = 0; t < panel.T; ++t) {
      const Cell& c = panel.cell(i, t);
      const int L = c.count();
      if (L == 0) continue;
      m_i += L;
      const double xt = state.x(i, t);
      // sum_l (y - x_t - b'u)^2 from the cell aggregates.
      rss += c.yy_sum - 2.0 * xt * c.y_sum + L * xt * xt -
             2.0 * b.dot(c.uy_sum) + 2.0 * xt * b.dot(c.u_sum) +
             b.dot(c.uu_sum * b);
    }
    state.R(i) = rng.inverse_gamma(h.alpha_R0 + 0.5 * m_i,
                                   h.beta_R0 + 0.5 * std::max(0.0, rss));
  }
}

void sample_beta(ModelState& state, StreamPanel& panel, Rng& rng) {
  const auto& h = state.hyper;
  const int H = state.H();
  for (int i = 0; i < state.p(); ++i) {
    for (int hh = 0; hh < H; ++hh) {
      double u_sq = 0.0, cross = 0.0;
      for (int t = 0; t < panel.T; ++t) {
        const Cell& c = panel.cell(i, t);
        if (c.count() == 0) continue;
        u_sq += c.uu_sum(hh, hh);
        double other = 0.0;
        for (int s = 0; s < H; ++s)
          if (s != hh) other += state.beta(i, s) * c.uu_sum(hh, s);
        cross += c.uy_sum(hh) - state.x(i, t) * c.u_sum(hh) - other;
      }
      const double v = 1.0 / (1.0 / h.sigma_h_sq(hh) + u_sq / state.R(i));
      const double mean = v * (h.mu_h(hh) / h.sigma_h_sq(hh) + cross / state.R(i));
      state.beta(i, hh) = rng.normal(mean, std::sqrt(v));
    }
  }
  refresh_suffstats(panel, state.beta);
}

void sample_sigma0(ModelState& state, Rng& rng) {
  const auto& h = state.hyper;
  const int T = state.T();
  double rss = 0.0;
  for (int i = 0; i < state.p(); ++i) {
    const int k = state.z[i];
    for (int t = 0; t < T; ++t) {
      const double prev = (t == 0) ? state.x_init(i) : state.x(i, t - 1);
      const double r = state.x(i, t) - state.a(i) * prev -
                       state.lambda(i) * state.eta(k, t);
      rss += r * r;
    }
  }
  state.sigma0_sq = rng.inverse_gamma(h.alpha_eps0 + 0.5 * T * state.p(),
                                      h.beta_eps0 + 0.5 * rss);
}

void sample_hyperparams(ModelState& state, Rng& rng) {
  auto& h = state.hyper;
  const int p = state.p();

  auto normal_update = [&](double prior_mean, double prior_var, double like_var,
                           double sum, int n) {
    const double v = 1.0 / (1.0 / prior_var + n / like_var);
    return rng.normal(v * (prior_mean / prior_var + sum / like_var), std::sqrt(v));
  };
  auto ig_update = [&](double shape0, double rate0, double scatter, int n) {
    return rng.inverse_gamma(shape0 + 0.5 * n, rate0 + 0.5 * scatter);
  };

  h.mu_lambda = normal_update(h.mu_lambda0, h.sigma_lambda0_sq, h.sigma_lambda_sq,
                              state.lambda.sum(), p);
  h.sigma_lambda_sq = ig_update(h.alpha_lambda0, h.beta_lambda0,
                                (state.lambda.array() - h.mu_lambda).square().sum(), p);
  h.mu_a = normal_update(h.mu_a0, h.sigma_a0_sq, h.sigma_a_sq, state.a.sum(), p);
  h.sigma_a_sq = ig_update(h.alpha_a0, h.beta_a0,
                           (state.a.array() - h.mu_a).square().sum(), p);
  for (int hh = 0; hh < state.H(); ++hh) {
    h.mu_h(hh) = normal_update(h.mu_h0, h.sigma_h0_sq, h.sigma_h_sq(hh),
                               state.beta.col(hh).sum(), p);
    h.sigma_h_sq(hh) =
        ig_update(h.alpha_h0, h.beta_h0,
                  (state.beta.col(hh).array() - h.mu_h(hh)).square().sum(), p);
  }
}

double concentration_mixture_weight(double alpha_alpha, int K, int p,
                                    double beta_alpha, double log_kappa) {
  const double odds = (alpha_alpha + K - 1) / (p * (beta_alpha - log_kappa));
  return odds / (1.0 + odds);
}

std::vector<double> crp_prior_masses(const std::vector<int>& sizes, double alpha) {
  if (!(alpha > 0.0)) throw ConfigError("crp_prior_masses: alpha must be positive");
  int n_minus_1 = 0;
  for (int s : sizes) n_minus_1 += s;
  const double denom = n_minus_1 + alpha;
  std::vector<double> masses;
  masses.reserve(sizes.size() + 1);
  for (int s : sizes) masses.push_back(s / denom);
  masses.push_back(alpha / denom);
  return masses;
}

void sample_alpha(ModelState& state, Rng& rng) {
  const auto& h = state.hyper;
  const int p = state.p();
  const double kappa = rng.beta(state.alpha + 1.0, double(p));
  const double rate = h.beta_alpha - std::log(kappa);
  const double shape_hi = h.alpha_alpha + state.K;
  const double shape_lo = shape_hi - 1.0;
  double pi = 1.0;
  if (shape_lo > 0.0)
    pi = concentration_mixture_weight(h.alpha_alpha, state.K, p, h.beta_alpha,
                                      std::log(kappa));
  const double shape = (rng.uniform() < pi) ? shape_hi : shape_lo;
  state.alpha = rng.gamma(shape, 1.0 / rate);
}

// --- sweep -------------------------------------------------------------------

void gibbs_sweep(ModelState& state, StreamPanel& panel, Rng& rng,
                 const SweepOptions& opts) {
  const ModelState snapshot = state;
  try {
    if (opts.sample_assignments) sample_z(state, panel, rng);
    sample_x_eta(state, panel, rng);
    sample_lambda(state, rng);
    sample_a(state, rng);
    sample_R(state, panel, rng);
    sample_beta(state, panel, rng);
    sample_sigma0(state, rng);
    if (opts.sample_hypers) sample_hyperparams(state, rng);
    if (opts.sample_concentration) sample_alpha(state, rng);
  } catch (...) {
    state = snapshot;
    refresh_suffstats(panel, state.beta);
    throw;
  }
}

void check_state_invariants(const ModelState& state, const StreamPanel& panel) {
  const int p = state.p();
  if (p != panel.p) throw DimensionError("state/panel region count mismatch");
  if (state.T() != panel.T) throw DimensionError("state/panel month count mismatch");
  if (state.H() != panel.H) throw DimensionError("state/panel hedonic dim mismatch");
  std::vector<int> counts(state.K, 0);
  for (int i = 0; i < p; ++i) {
    if (state.z[i] < 0 || state.z[i] >= state.K)
      throw DataError("labels are not contiguous in 0..K-1");
    counts[state.z[i]] += 1;
  }
  for (int k = 0; k < state.K; ++k)
    if (counts[k] == 0) throw DataError("cluster " + std::to_string(k) + " is empty");
  if (!(state.sigma0_sq > 0.0)) throw DataError("sigma0_sq must be positive");
  for (int i = 0; i < p; ++i)
    if (!(state.R(i) > 0.0)) throw DataError("R must be positive");
  if (state.eta.rows() != state.K) throw DimensionError("eta must have K rows");
  if (!(state.alpha > 0.0)) throw DataError("alpha must be positive");
  state.hyper.validate();
}

// --- serialization -----------------------------------------------------------

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.size();
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  const auto cols = j.at(0).size();
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = j.at(i).get<double>();
  return v;
}

json hyper_to_json(const HyperParams& h) {
  return json{{"mu_lambda", h.mu_lambda},
              {"sigma_lambda_sq", h.sigma_lambda_sq},
              {"mu_a", h.mu_a},
              {"sigma_a_sq", h.sigma_a_sq},
              {"mu_h", vector_to_json(h.mu_h)},
              {"sigma_h_sq", vector_to_json(h.sigma_h_sq)},
              {"alpha_eps0", h.alpha_eps0},
              {"beta_eps0", h.beta_eps0},
              {"alpha_R0", h.alpha_R0},
              {"beta_R0", h.beta_R0},
              {"mu_lambda0", h.mu_lambda0},
              {"sigma_lambda0_sq", h.sigma_lambda0_sq},
              {"mu_a0", h.mu_a0},
              {"sigma_a0_sq", h.sigma_a0_sq},
              {"mu_h0", h.mu_h0},
              {"sigma_h0_sq", h.sigma_h0_sq},
              {"alpha_lambda0", h.alpha_lambda0},
              {"beta_lambda0", h.beta_lambda0},
              {"alpha_a0", h.alpha_a0},
              {"beta_a0", h.beta_a0},
              {"alpha_h0", h.alpha_h0},
              {"beta_h0", h.beta_h0},
              {"alpha_alpha", h.alpha_alpha},
              {"beta_alpha", h.beta_alpha},
              {"init_state_var", h.init_state_var}};
}

HyperParams hyper_from_json(const json& j) {
  HyperParams h;
  h.mu_lambda = j.at("mu_lambda");
  h.sigma_lambda_sq = j.at("sigma_lambda_sq");
  h.mu_a = j.at("mu_a");
  h.sigma_a_sq = j.at("sigma_a_sq");
  h.mu_h = vector_from_json(j.at("mu_h"));
  h.sigma_h_sq = vector_from_json(j.at("sigma_h_sq"));
  h.alpha_eps0 = j.at("alpha_eps0");
  h.beta_eps0 = j.at("beta_eps0");
  h.alpha_R0 = j.at("alpha_R0");
  h.beta_R0 = j.at("beta_R0");
  h.mu_lambda0 = j.at("mu_lambda0");
  h.sigma_lambda0_sq = j.at("sigma_lambda0_sq");
  h.mu_a0 = j.at("mu_a0");
  h.sigma_a0_sq = j.at("sigma_a0_sq");
  h.mu_h0 = j.at("mu_h0");
  h.sigma_h0_sq = j.at("sigma_h0_sq");
  h.alpha_lambda0 = j.at("alpha_lambda0");
  h.beta_lambda0 = j.at("beta_lambda0");
  h.alpha_a0 = j.at("alpha_a0");
  h.beta_a0 = j.at("beta_a0");
  h.alpha_h0 = j.at("alpha_h0");
  h.beta_h0 = j.at("beta_h0");
  h.alpha_alpha = j.at("alpha_alpha");
  h.beta_alpha = j.at("beta_alpha");
  h.init_state_var = j.at("init_state_var");
  return h;
}

}  // namespace

std::string state_to_json(const ModelState& state) {
  json j{{"z", state.z},
         {"K", state.K},
         {"x", matrix_to_json(state.x)},
         {"x_init", vector_to_json(state.x_init)},
         {"eta", matrix_to_json(state.eta)},
         {"lambda", vector_to_json(state.lambda)},
         {"a", vector_to_json(state.a)},
         {"R", vector_to_json(state.R)},
         {"beta", matrix_to_json(state.beta)},
         {"sigma0_sq", state.sigma0_sq},
         {"alpha", state.alpha},
         {"hyper", hyper_to_json(state.hyper)}};
  return j.dump();
}

ModelState state_from_json(const std::string& json_text) {
  const json j = json::parse(json_text);
  ModelState s;
  s.z = j.at("z").get<std::vector<int>>();
  s.K = j.at("K");
  s.x = matrix_from_json(j.at("x"));
  s.x_init = vector_from_json(j.at("x_init"));
  s.eta = matrix_from_json(j.at("eta"));
  s.lambda = vector_from_json(j.at("lambda"));
  s.a = vector_from_json(j.at("a"));
  s.R = vector_from_json(j.at("R"));
  s.beta = matrix_from_json(j.at("beta"));
  s.sigma0_sq = j.at("sigma0_sq");
  s.alpha = j.at("alpha");
  s.hyper = hyper_from_json(j.at("hyper"));
  return s;
}

}  // namespace hpi
