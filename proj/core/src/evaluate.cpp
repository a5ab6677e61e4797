#include "hpi/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hpi/errors.hpp"
#include "hpi/kalman.hpp"
#include "hpi/math.hpp"

namespace hpi {

std::vector<int> hungarian_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw DimensionError("hungarian_assignment: matrix must be square");
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // Potentials and augmenting paths, 1-indexed internally.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      int j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> match(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) match[p[j] - 1] = j - 1;
  return match;
}

double hamming_optimal(const std::vector<int>& z_est, const std::vector<int>& z_true) {
  if (z_est.size() != z_true.size())
    throw DimensionError("hamming_optimal: labelings differ in length");
  const int n = static_cast<int>(z_est.size());
  if (n == 0) return 0.0;
  const int ke = *std::max_element(z_est.begin(), z_est.end()) + 1;
  const int kt = *std::max_element(z_true.begin(), z_true.end()) + 1;
  const int m = std::max(ke, kt);
  Eigen::MatrixXd confusion = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < n; ++i) confusion(z_est[i], z_true[i]) += 1.0;
  // Maximize matches == minimize negated confusion; padding rows/cols cost 0.
  const auto match = hungarian_assignment(-confusion);
  double matched = 0.0;
  for (int r = 0; r < m; ++r) matched += confusion(r, match[r]);
  return 1.0 - matched / n;
}

double psrf(const std::vector<std::vector<double>>& chains) {
  const int m = static_cast<int>(chains.size());
  if (m < 2) throw DataError("psrf: at least 2 chains required");
  const std::size_t n = chains[0].size();
  for (const auto& c : chains)
    if (c.size() != n) throw DimensionError("psrf: chains must have equal length");
  if (n < 2) throw DataError("psrf: chains too short");

  std::vector<double> means(m);
  double grand = 0.0;
  for (int j = 0; j < m; ++j) {
    double s = 0.0;
    for (double v : chains[j]) s += v;
    means[j] = s / n;
    grand += means[j];
  }
  grand /= m;
  double B = 0.0;  // between-chain variance * n
  for (int j = 0; j < m; ++j) B += (means[j] - grand) * (means[j] - grand);
  B *= static_cast<double>(n) / (m - 1);
  double W = 0.0;
  for (int j = 0; j < m; ++j) {
    double s = 0.0;
    for (double v : chains[j]) s += (v - means[j]) * (v - means[j]);
    W += s / (n - 1);
  }
  W /= m;
  if (W <= 0.0) return B > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  const double var_plus = (n - 1.0) / n * W + B / n;
  return std::sqrt(var_plus / W);
}

std::vector<Prediction> predict_prices(const ChainArchive& archive,
                                       const TestSet& test, const GlobalTrend& trend,
                                       Rng& rng, int sims_per_sample) {
  const auto samples = archive.all_samples();
  if (samples.empty()) throw DataError("predict_prices: archive has no samples");
  if (sims_per_sample < 1) throw ConfigError("predict_prices: sims_per_sample >= 1");
  std::vector<Prediction> out;
  out.reserve(test.obs.size());
  std::vector<double> prices;
  prices.reserve(samples.size() * sims_per_sample);
  for (const auto& o : test.obs) {
    if (o.month < 0 || o.month >= trend.num_months())
      throw DataError("predict_prices: test month not covered by the trend");
    prices.clear();
    for (const Sample* s : samples) {
      const double mean = s->x(o.region, o.month) + s->beta.row(o.region).dot(o.u);
      const double sd = std::sqrt(s->R(o.region));
      for (int r = 0; r < sims_per_sample; ++r) {
        const double y_star = (sd > 0.0) ? rng.normal(mean, sd) : mean;
        prices.push_back(trend.g(o.month) * std::exp(y_star / archive.scale));
      }
    }
    Prediction pred;
    pred.region = o.region;
    pred.month = o.month;
    pred.truth_price = trend.g(o.month) * std::exp(o.y / archive.scale);
    double acc = 0.0;
    for (double v : prices) acc += v;
    pred.mean_price = acc / prices.size();
    std::sort(prices.begin(), prices.end());
    const auto quantile = [&](double q) {
      const double idx = q * (prices.size() - 1);
      const std::size_t lo = static_cast<std::size_t>(idx);
      const std::size_t hi = std::min(lo + 1, prices.size() - 1);
      const double w = idx - lo;
      return (1.0 - w) * prices[lo] + w * prices[hi];
    };
    pred.lo95 = quantile(0.025);
    pred.hi95 = quantile(0.975);
    out.push_back(pred);
  }
  return out;
}

Metrics compute_metrics(const std::vector<double>& pred,
                        const std::vector<double>& truth) {
  if (pred.size() != truth.size())
    throw DimensionError("compute_metrics: length mismatch");
  if (pred.empty()) throw DataError("compute_metrics: empty input");
  const std::size_t n = pred.size();
  Metrics m;
  double sse = 0.0, ape_sum = 0.0;
  std::vector<double> apes(n);
  int within = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double err = pred[i] - truth[i];
    sse += err * err;
    const double ape = std::abs(err) / std::abs(truth[i]);
    apes[i] = ape;
    ape_sum += ape;
    if (ape <= 0.10) ++within;
  }
  m.rmse = std::sqrt(sse / n);
  m.mean_ape = ape_sum / n;
  std::sort(apes.begin(), apes.end());
  const auto quantile = [&](double q) {
    const double idx = q * (n - 1);
    const std::size_t lo = static_cast<std::size_t>(idx);
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double w = idx - lo;
    return (1.0 - w) * apes[lo] + w * apes[hi];
  };
  m.median_ape = quantile(0.5);
  m.ape90 = quantile(0.9);
  m.p10 = static_cast<double>(within) / n;
  return m;
}

EmFit baseline_em_kalman(const StreamPanel& panel, int region, const EmOptions& opts) {
  if (region < 0 || region >= panel.p)
    throw DimensionError("baseline_em_kalman: bad region index");
  const int T = panel.T;
  const int H = panel.H;

  EmFit fit;
  fit.low_data = panel.region_obs_count(region) < 5;
  fit.a = 0.5;
  fit.q = 0.1;
  fit.R = 0.5;
  fit.beta = Eigen::VectorXd::Zero(H);

  // Per-month adjusted means under the current beta, plus within-cell
  // scatter for the exact observed-data log-likelihood.
  std::vector<int> L(T);
  std::vector<double> psi_bar(T), scatter(T);
  auto refresh_obs = [&]() {
    for (int t = 0; t < T; ++t) {
      const Cell& c = panel.cell(region, t);
      L[t] = c.count();
      if (L[t] == 0) {
        psi_bar[t] = scatter[t] = 0.0;
        continue;
      }
      double s = 0.0, ss = 0.0;
      for (int l = 0; l < L[t]; ++l) {
        const double psi = c.y[l] - fit.beta.dot(c.u[l]);
        s += psi;
        ss += psi * psi;
      }
      psi_bar[t] = s / L[t];
      scatter[t] = std::max(0.0, ss - L[t] * psi_bar[t] * psi_bar[t]);
    }
  };

  // Scalar filter/smoother over T+1 states (index 0 = pre-panel state).
  std::vector<double> mf(T + 1), vf(T + 1), mp(T + 1), vp(T + 1);
  std::vector<double> ms(T + 1), vs(T + 1), cs(T + 1);  // cs[t] = Cov(x_t, x_{t-1} | y)
  auto e_step = [&]() {
    double loglik = 0.0;
    mf[0] = 0.0;
    vf[0] = opts.init_state_var;
    mp[0] = 0.0;
    vp[0] = opts.init_state_var;
    for (int t = 1; t <= T; ++t) {
      mp[t] = fit.a * mf[t - 1];
      vp[t] = fit.a * fit.a * vf[t - 1] + fit.q;
      const int month = t - 1;
      if (L[month] == 0) {
        mf[t] = mp[t];
        vf[t] = vp[t];
        continue;
      }
      const double r_bar = fit.R / L[month];
      const double s = vp[t] + r_bar;
      const double e = psi_bar[month] - mp[t];
      loglik += -0.5 * (kLog2Pi + std::log(s) + e * e / s);
      // Within-cell residual term makes this the likelihood of the
      // individual observations, not just the cell means.
      loglik += -0.5 * ((L[month] - 1) * (kLog2Pi + std::log(fit.R)) +
                        std::log(double(L[month])) + scatter[month] / fit.R);
      const double k = vp[t] / s;
      mf[t] = mp[t] + k * e;
      vf[t] = (1.0 - k) * vp[t];
    }
    ms[T] = mf[T];
    vs[T] = vf[T];
    for (int t = T - 1; t >= 0; --t) {
      const double j = vf[t] * fit.a / vp[t + 1];
      ms[t] = mf[t] + j * (ms[t + 1] - mp[t + 1]);
      vs[t] = vf[t] + j * j * (vs[t + 1] - vp[t + 1]);
      cs[t + 1] = j * vs[t + 1];
    }
    return loglik;
  };

  refresh_obs();
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    const double ll = e_step();
    fit.loglik_trace.push_back(ll);

    // M-step. AR coefficient and innovation variance from the smoothed
    // first and second moments.
    double num = 0.0, den = 0.0;
    for (int t = 1; t <= T; ++t) {
      num += ms[t] * ms[t - 1] + cs[t];
      den += ms[t - 1] * ms[t - 1] + vs[t - 1];
    }
    const double a_new = den > 0.0 ? num / den : 0.0;
    double q_new = 0.0;
    for (int t = 1; t <= T; ++t) {
      q_new += ms[t] * ms[t] + vs[t] - 2.0 * a_new * (ms[t] * ms[t - 1] + cs[t]) +
               a_new * a_new * (ms[t - 1] * ms[t - 1] + vs[t - 1]);
    }
    q_new /= T;

    // Hedonic effects by least squares against smoothed states.
    Eigen::MatrixXd utu = Eigen::MatrixXd::Zero(H, H);
    Eigen::VectorXd utr = Eigen::VectorXd::Zero(H);
    double rss = 0.0;
    int m_obs = 0;
    for (int t = 0; t < T; ++t) {
      const Cell& c = panel.cell(region, t);
      for (int l = 0; l < c.count(); ++l) {
        utu += c.u[l] * c.u[l].transpose();
        utr += c.u[l] * (c.y[l] - ms[t + 1]);
      }
    }
    Eigen::VectorXd beta_new = fit.beta;
    if (H > 0) {
      Eigen::MatrixXd reg = utu;
      reg.diagonal().array() += 1e-10;
      beta_new = reg.ldlt().solve(utr);
    }
    for (int t = 0; t < T; ++t) {
      const Cell& c = panel.cell(region, t);
      for (int l = 0; l < c.count(); ++l) {
        const double r = c.y[l] - ms[t + 1] - beta_new.dot(c.u[l]);
        rss += r * r + vs[t + 1];
        ++m_obs;
      }
    }
    const double r_new = m_obs > 0 ? rss / m_obs : fit.R;

    fit.a = a_new;
    fit.q = std::max(q_new, 1e-10);
    fit.R = std::max(r_new, 1e-10);
    fit.beta = beta_new;
    refresh_obs();

    if (iter > 0 && ll - prev_ll < opts.tol * (1.0 + std::abs(prev_ll)) &&
        ll >= prev_ll)
      break;
    prev_ll = ll;
  }
  // Final E-step under the converged parameters for the returned states.
  const double final_ll = e_step();
  fit.loglik_trace.push_back(final_ll);
  fit.x_smooth.resize(T);
  fit.x_var.resize(T);
  for (int t = 0; t < T; ++t) {
    fit.x_smooth(t) = ms[t + 1];
    fit.x_var(t) = vs[t + 1];
  }
  return fit;
}

IndexSummary index_summary(const ChainArchive& archive) {
  const auto samples = archive.all_samples();
  if (samples.empty()) throw DataError("index_summary: archive has no samples");
  const int p = archive.p;
  const int T = archive.T;
  const int n = static_cast<int>(samples.size());

  IndexSummary out;
  out.mean = Eigen::MatrixXd::Zero(p, T);
  out.lo95.resize(p, T);
  out.hi95.resize(p, T);
  std::vector<double> vals(n);
  for (int i = 0; i < p; ++i)
    for (int t = 0; t < T; ++t) {
      double acc = 0.0;
      for (int s = 0; s < n; ++s) {
        vals[s] = samples[s]->x(i, t);
        acc += vals[s];
      }
      out.mean(i, t) = acc / n;
      std::sort(vals.begin(), vals.end());
      const auto quantile = [&](double q) {
        const double idx = q * (n - 1);
        const std::size_t lo = static_cast<std::size_t>(idx);
        const std::size_t hi = std::min<std::size_t>(lo + 1, n - 1);
        const double w = idx - lo;
        return (1.0 - w) * vals[lo] + w * vals[hi];
      };
      out.lo95(i, t) = quantile(0.025);
      out.hi95(i, t) = quantile(0.975);
    }

  std::vector<std::vector<int>> labelings;
  labelings.reserve(n);
  for (const Sample* s : samples) labelings.push_back(s->z);
  out.cooccurrence = cooccurrence_matrix(labelings);
  return out;
}

Eigen::MatrixXd cooccurrence_matrix(const std::vector<std::vector<int>>& labelings) {
  if (labelings.empty()) throw DataError("cooccurrence_matrix: no labelings");
  const int p = static_cast<int>(labelings[0].size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p, p);
  for (const auto& z : labelings) {
    if (static_cast<int>(z.size()) != p)
      throw DimensionError("cooccurrence_matrix: inconsistent lengths");
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j)
        if (z[i] == z[j]) m(i, j) += 1.0;
  }
  m /= static_cast<double>(labelings.size());
  return m;
}

}  // namespace hpi
