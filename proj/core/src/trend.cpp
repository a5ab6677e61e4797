#include "hpi/trend.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "hpi/errors.hpp"

namespace hpi {

Decomposition classical_decompose(const Eigen::VectorXd& series) {
  const int T = static_cast<int>(series.size());
  constexpr int period = 12;
  constexpr int half = period / 2;
  Decomposition d;
  d.trend.resize(T);
  d.seasonal.resize(T);
  d.noise.resize(T);

  if (T < period + 1) {
    // Too short for a centered annual average: flat trend, seasonal from
    // whatever month coverage exists.
    d.trend.setConstant(series.mean());
  } else {
    // 2x12 centered moving average: full weight on the 11 interior lags,
    // half weight at the +-6 ends.
    for (int t = half; t < T - half; ++t) {
      double acc = 0.5 * series(t - half) + 0.5 * series(t + half);
      for (int k = -half + 1; k <= half - 1; ++k) acc += series(t + k);
      d.trend(t) = acc / period;
    }
    for (int t = 0; t < half; ++t) d.trend(t) = d.trend(half);
    for (int t = T - half; t < T; ++t) d.trend(t) = d.trend(T - half - 1);
  }

  // Month-of-year means of the detrended series, then center so the
  // seasonal part sums to zero over any 12 consecutive months.
  Eigen::VectorXd month_sum = Eigen::VectorXd::Zero(period);
  Eigen::VectorXd month_cnt = Eigen::VectorXd::Zero(period);
  for (int t = 0; t < T; ++t) {
    month_sum(t % period) += series(t) - d.trend(t);
    month_cnt(t % period) += 1.0;
  }
  Eigen::VectorXd month_mean(period);
  for (int m = 0; m < period; ++m)
    month_mean(m) = month_cnt(m) > 0 ? month_sum(m) / month_cnt(m) : 0.0;
  month_mean.array() -= month_mean.mean();
  for (int t = 0; t < T; ++t) d.seasonal(t) = month_mean(t % period);
  d.noise = series - d.trend - d.seasonal;
  return d;
}

GlobalTrend estimate_global_trend(const TransactionSet& tx, int T, int H) {
  if (T < 1) throw ConfigError("estimate_global_trend: T must be >= 1");
  if (tx.hedonic_dim != H)
    throw DimensionError("estimate_global_trend: H does not match the parsed hedonic dimension");
  const int dim = T + H;

  // Accumulate X'X and X'y without materializing the design matrix; the
  // monthly-indicator block contributes diag(counts) and per-month hedonic
  // sums only.
  Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd xty = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd month_count = Eigen::VectorXd::Zero(T);
  for (const auto& row : tx.rows) {
    if (row.month < 0 || row.month >= T)
      throw DataError("estimate_global_trend: transaction month outside [0, T)");
    const double ly = std::log(row.price);
    const int t = row.month;
    month_count(t) += 1.0;
    xtx(t, t) += 1.0;
    xty(t) += ly;
    for (int h = 0; h < H; ++h) {
      const double u = row.hedonics(h);
      xtx(t, T + h) += u;
      xtx(T + h, t) += u;
      xty(T + h) += u * ly;
      for (int h2 = 0; h2 < H; ++h2) xtx(T + h, T + h2) += u * row.hedonics(h2);
    }
  }
  for (int t = 0; t < T; ++t)
    if (month_count(t) == 0.0)
      throw DataError("estimate_global_trend: month " + std::to_string(t) +
                      " has no transactions; monthly effect unidentifiable");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xtx);
  qr.setThreshold(1e-10);
  if (qr.rank() < dim) {
    const auto& perm = qr.colsPermutation().indices();
    std::string cols;
    for (int k = qr.rank(); k < dim; ++k) {
      const int j = perm(k);
      if (!cols.empty()) cols += ", ";
      cols += (j < T) ? ("month_" + std::to_string(j)) : ("hedonic_" + std::to_string(j - T));
    }
    throw DataError("estimate_global_trend: design is rank deficient; dependent columns: " + cols);
  }
  const Eigen::VectorXd coef = qr.solve(xty);

  GlobalTrend out;
  out.monthly_effects = coef.head(T);
  out.hedonic_coeffs = coef.tail(H);
  const Decomposition d = classical_decompose(out.monthly_effects);
  out.trend_component = d.trend;
  out.seasonal_component = d.seasonal;
  out.g = (out.trend_component + out.seasonal_component).array().exp();
  return out;
}

void write_trend_csv(std::ostream& os, const GlobalTrend& trend) {
  os << "month_index,g,trend,seasonal\n";
  char buf[128];
  for (int t = 0; t < trend.num_months(); ++t) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", t, trend.g(t),
                  trend.trend_component(t), trend.seasonal_component(t));
    os << buf;
  }
}

GlobalTrend read_trend_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw DataError("trend CSV is empty");
  std::vector<double> g, tr, se;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() < 4) throw DataError("trend CSV: malformed row");
    g.push_back(std::stod(f[1]));
    tr.push_back(std::stod(f[2]));
    se.push_back(std::stod(f[3]));
  }
  GlobalTrend out;
  const int T = static_cast<int>(g.size());
  out.g = Eigen::Map<Eigen::VectorXd>(g.data(), T);
  out.trend_component = Eigen::Map<Eigen::VectorXd>(tr.data(), T);
  out.seasonal_component = Eigen::Map<Eigen::VectorXd>(se.data(), T);
  out.monthly_effects = out.trend_component + out.seasonal_component;
  out.hedonic_coeffs.resize(0);
  return out;
}

}  // namespace hpi
