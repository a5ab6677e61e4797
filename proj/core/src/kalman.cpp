#include "hpi/kalman.hpp"

#include <cmath>

#include "hpi/errors.hpp"
#include "hpi/math.hpp"

namespace hpi {

Eigen::MatrixXd ClusterView::Q() const {
  const int n = size();
  Eigen::MatrixXd q = lambda * lambda.transpose();
  q.diagonal().array() += sigma0_sq;
  (void)n;
  return q;
}

InitialStatePrior default_init(const ClusterView& view, double var) {
  const int n = view.size();
  return {Eigen::VectorXd::Zero(n),
          Eigen::MatrixXd::Identity(n, n) * var};
}

namespace {

void check_inputs(const ClusterView& view, const StreamPanel& panel,
                  const InitialStatePrior& init) {
  const int n = view.size();
  if (n == 0) throw DimensionError("filter: empty cluster view");
  if (view.a.size() != n || view.lambda.size() != n || view.R.size() != n ||
      view.beta.rows() != n || view.beta.cols() != panel.H)
    throw DimensionError("filter: view parameter shapes do not match members");
  if (init.mean.size() != n || init.cov.rows() != n || init.cov.cols() != n)
    throw DimensionError("filter: initial state prior has wrong dimension");
  if (!view.a.allFinite() || !view.lambda.allFinite() || !view.R.allFinite() ||
      !view.beta.allFinite() || !std::isfinite(view.sigma0_sq) ||
      !init.mean.allFinite() || !init.cov.allFinite())
    throw NumericError("filter: non-finite input");
  for (int i : view.members)
    if (i < 0 || i >= panel.p)
      throw DimensionError("filter: member index outside the panel");
  if (panel.T < 1) throw DimensionError("filter: panel has no months");
}

// Shared predict step: mu -> A mu, V -> A V A' + Q with A = diag(a).
inline void predict(const Eigen::VectorXd& a, const Eigen::MatrixXd& Q,
                    const Eigen::VectorXd& mu_in, const Eigen::MatrixXd& V_in,
                    Eigen::VectorXd& mu_out, Eigen::MatrixXd& V_out) {
  mu_out = a.cwiseProduct(mu_in);
  V_out = (a * a.transpose()).cwiseProduct(V_in) + Q;
}

double filter_naive_impl(const ClusterView& view, const StreamPanel& panel,
                         const InitialStatePrior& init, FilterResult* out) {
  check_inputs(view, panel, init);
  const int n = view.size();
  const int T = panel.T;
  const Eigen::MatrixXd Q = view.Q();

  if (out) {
    out->mu_filt.resize(n, T);
    out->mu_pred.resize(n, T);
    out->V_filt.assign(T, Eigen::MatrixXd());
    out->V_pred.assign(T, Eigen::MatrixXd());
  }

  double loglik = 0.0;
  Eigen::VectorXd mu = init.mean;
  Eigen::MatrixXd V = init.cov;
  Eigen::VectorXd mu_pred(n);
  Eigen::MatrixXd V_pred(n, n);

  std::vector<int> row_of;   // member row per observation
  std::vector<double> resid; // innovation per observation
  for (int t = 0; t < T; ++t) {
    predict(view.a, Q, mu, V, mu_pred, V_pred);

    row_of.clear();
    resid.clear();
    for (int j = 0; j < n; ++j) {
      const Cell& c = panel.cell(view.members[j], t);
      for (int l = 0; l < c.count(); ++l) {
        row_of.push_back(j);
        resid.push_back(c.y[l] - view.beta.row(j).dot(c.u[l]) - mu_pred(j));
      }
    }
    const int m = static_cast<int>(row_of.size());
    if (m == 0) {
      mu = mu_pred;
      V = V_pred;
    } else {
      Eigen::VectorXd e = Eigen::Map<Eigen::VectorXd>(resid.data(), m);
      if (!e.allFinite()) throw NumericError("filter: non-finite observation", t);
      Eigen::MatrixXd S(m, m);
      for (int l = 0; l < m; ++l)
        for (int l2 = 0; l2 < m; ++l2) S(l, l2) = V_pred(row_of[l], row_of[l2]);
      for (int l = 0; l < m; ++l) S(l, l) += view.R(row_of[l]);

      const auto llt = robust_llt(S, t);
      double log_det = 0.0;
      for (int l = 0; l < m; ++l) log_det += 2.0 * std::log(llt.matrixLLT()(l, l));
      const Eigen::VectorXd se = llt.solve(e);
      loglik += -0.5 * (m * kLog2Pi + log_det + e.dot(se));

      // M(:, l) = V_pred * c_l where c_l selects the member of sale l.
      Eigen::MatrixXd M(n, m);
      for (int l = 0; l < m; ++l) M.col(l) = V_pred.col(row_of[l]);
      const Eigen::MatrixXd K = llt.solve(M.transpose()).transpose();
      mu = mu_pred + K * e;
      V = V_pred - K * M.transpose();
      symmetrize(V);
    }

    if (out) {
      out->mu_pred.col(t) = mu_pred;
      out->V_pred[t] = V_pred;
      out->mu_filt.col(t) = mu;
      out->V_filt[t] = V;
    }
  }
  return loglik;
}

double filter_suffstat_impl(const ClusterView& view, const StreamPanel& panel,
                            const InitialStatePrior& init, FilterResult* out) {
  check_inputs(view, panel, init);
  const int n = view.size();
  const int T = panel.T;
  const Eigen::MatrixXd Q = view.Q();

  if (out) {
    out->mu_filt.resize(n, T);
    out->mu_pred.resize(n, T);
    out->V_filt.assign(T, Eigen::MatrixXd());
    out->V_pred.assign(T, Eigen::MatrixXd());
  }

  double loglik = 0.0;
  Eigen::VectorXd mu = init.mean;
  Eigen::MatrixXd V = init.cov;
  Eigen::VectorXd mu_pred(n);
  Eigen::MatrixXd V_pred(n, n);

  std::vector<int> obs;  // members with sales this month
  for (int t = 0; t < T; ++t) {
    predict(view.a, Q, mu, V, mu_pred, V_pred);

    obs.clear();
    for (int j = 0; j < n; ++j)
      if (panel.cell(view.members[j], t).count() > 0) obs.push_back(j);
    const int m = static_cast<int>(obs.size());
    if (m == 0) {
      mu = mu_pred;
      V = V_pred;
    } else {
      Eigen::VectorXd e(m);
      Eigen::MatrixXd S(m, m);
      for (int l = 0; l < m; ++l) {
        const int j = obs[l];
        const Cell& c = panel.cell(view.members[j], t);
        e(l) = c.psi_bar - mu_pred(j);
        for (int l2 = 0; l2 < m; ++l2) S(l, l2) = V_pred(obs[l], obs[l2]);
        S(l, l) += view.R(j) / c.count();
      }
      if (!e.allFinite()) throw NumericError("filter: non-finite observation", t);

      const auto llt = robust_llt(S, t);
      double log_det = 0.0;
      for (int l = 0; l < m; ++l) log_det += 2.0 * std::log(llt.matrixLLT()(l, l));
      const Eigen::VectorXd se = llt.solve(e);
      loglik += -0.5 * (m * kLog2Pi + log_det + e.dot(se));

      Eigen::MatrixXd M(n, m);
      for (int l = 0; l < m; ++l) M.col(l) = V_pred.col(obs[l]);
      const Eigen::MatrixXd K = llt.solve(M.transpose()).transpose();
      mu = mu_pred + K * e;
      V = V_pred - K * M.transpose();
      symmetrize(V);
    }

    if (out) {
      out->mu_pred.col(t) = mu_pred;
      out->V_pred[t] = V_pred;
      out->mu_filt.col(t) = mu;
      out->V_filt[t] = V;
    }
  }
  return loglik;
}

}  // namespace

double suffstat_correction(const ClusterView& view, const StreamPanel& panel) {
  double corr = 0.0;
  for (int j = 0; j < view.size(); ++j) {
    const double log_r = std::log(view.R(j));
    for (int t = 0; t < panel.T; ++t) {
      const Cell& c = panel.cell(view.members[j], t);
      const int L = c.count();
      if (L == 0) continue;
      const double scatter =
          std::max(0.0, c.psi_sqsum - L * c.psi_bar * c.psi_bar);
      corr += -0.5 * ((L - 1) * (kLog2Pi + log_r) + std::log(double(L)) +
                      scatter / view.R(j));
    }
  }
  return corr;
}

FilterResult filter_naive(const ClusterView& view, const StreamPanel& panel,
                          const InitialStatePrior& init) {
  FilterResult out;
  out.loglik = filter_naive_impl(view, panel, init, &out);
  return out;
}

double marginal_loglik_naive(const ClusterView& view, const StreamPanel& panel,
                             const InitialStatePrior& init) {
  return filter_naive_impl(view, panel, init, nullptr);
}

FilterResult filter_suffstat(const ClusterView& view, const StreamPanel& panel,
                             const InitialStatePrior& init) {
  FilterResult out;
  out.loglik = filter_suffstat_impl(view, panel, init, &out) +
               suffstat_correction(view, panel);
  return out;
}

double marginal_loglik_suffstat(const ClusterView& view, const StreamPanel& panel,
                                const InitialStatePrior& init) {
  return filter_suffstat_impl(view, panel, init, nullptr) +
         suffstat_correction(view, panel);
}

namespace {

ClusterView drop_member(const ClusterView& view, int local_index) {
  const int n = view.size();
  ClusterView out;
  out.sigma0_sq = view.sigma0_sq;
  out.members.reserve(n - 1);
  out.a.resize(n - 1);
  out.lambda.resize(n - 1);
  out.R.resize(n - 1);
  out.beta.resize(n - 1, view.beta.cols());
  int k = 0;
  for (int j = 0; j < n; ++j) {
    if (j == local_index) continue;
    out.members.push_back(view.members[j]);
    out.a(k) = view.a(j);
    out.lambda(k) = view.lambda(j);
    out.R(k) = view.R(j);
    out.beta.row(k) = view.beta.row(j);
    ++k;
  }
  return out;
}

}  // namespace

double stream_conditional_loglik(const ClusterView& view_with_i, int local_index,
                                 const StreamPanel& panel,
                                 const InitialStatePrior& init_with,
                                 const InitialStatePrior& init_without) {
  if (local_index < 0 || local_index >= view_with_i.size())
    throw DimensionError("stream_conditional_loglik: bad member index");
  const double with_i = marginal_loglik_suffstat(view_with_i, panel, init_with);
  if (view_with_i.size() == 1) return with_i;
  const ClusterView rest = drop_member(view_with_i, local_index);
  return with_i - marginal_loglik_suffstat(rest, panel, init_without);
}

double stream_conditional_loglik(const ClusterView& view_with_i, int local_index,
                                 const StreamPanel& panel, double init_var) {
  InitialStatePrior with = default_init(view_with_i, init_var);
  InitialStatePrior without{Eigen::VectorXd::Zero(view_with_i.size() - 1),
                            Eigen::MatrixXd::Identity(view_with_i.size() - 1,
                                                      view_with_i.size() - 1) *
                                init_var};
  return stream_conditional_loglik(view_with_i, local_index, panel, with, without);
}

double new_cluster_loglik(int region, double a_i, double lambda_new,
                          double sigma0_sq, double R_i,
                          const Eigen::VectorXd& beta_row,
                          const StreamPanel& panel, double init_var) {
  ClusterView v;
  v.members = {region};
  v.a = Eigen::VectorXd::Constant(1, a_i);
  v.lambda = Eigen::VectorXd::Constant(1, lambda_new);
  v.sigma0_sq = sigma0_sq;
  v.R = Eigen::VectorXd::Constant(1, R_i);
  v.beta = beta_row.transpose();
  return marginal_loglik_suffstat(v, panel, default_init(v, init_var));
}

StateDraw ffbs(const ClusterView& view, const StreamPanel& panel,
               const InitialStatePrior& init, Rng& rng) {
  const FilterResult f = filter_suffstat(view, panel, init);
  const int n = view.size();
  const int T = panel.T;

  StateDraw draw;
  draw.x.resize(n, T);
  draw.x.col(T - 1) = mvn_sample(f.mu_filt.col(T - 1), f.V_filt[T - 1], rng);

  const auto backward = [&](const Eigen::VectorXd& mu_t, const Eigen::MatrixXd& V_t,
                            int t_next, const Eigen::VectorXd& x_next) {
    const auto llt = robust_llt(f.V_pred[t_next], t_next);
    // J = V_t A' V_pred^{-1}; solve against A V_t (A diagonal, V symmetric).
    const Eigen::MatrixXd J =
        llt.solve(view.a.asDiagonal() * V_t).transpose();
    const Eigen::VectorXd mean = mu_t + J * (x_next - f.mu_pred.col(t_next));
    Eigen::MatrixXd cov = V_t - J * f.V_pred[t_next] * J.transpose();
    symmetrize(cov);
    return mvn_sample(mean, cov, rng);
  };

  for (int t = T - 2; t >= 0; --t)
    draw.x.col(t) = backward(f.mu_filt.col(t), f.V_filt[t], t + 1, draw.x.col(t + 1));
  draw.x_init = backward(init.mean, init.cov, 0, draw.x.col(0));
  return draw;
}

}  // namespace hpi
