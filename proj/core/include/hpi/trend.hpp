#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "hpi/transactions.hpp"

namespace hpi {

// Market-wide monthly price level g_t = exp(trend_t + seasonal_t), fitted
// once on all transactions and held fixed downstream.
struct GlobalTrend {
  Eigen::VectorXd g;                  // length T, positive
  Eigen::VectorXd trend_component;    // length T
  Eigen::VectorXd seasonal_component; // length T, month-of-year means, centered
  Eigen::VectorXd monthly_effects;    // length T, raw OLS alpha_t
  Eigen::VectorXd hedonic_coeffs;     // length H

  int num_months() const { return static_cast<int>(g.size()); }
};

struct Decomposition {
  Eigen::VectorXd trend;
  Eigen::VectorXd seasonal;
  Eigen::VectorXd noise;
};

// Classical additive decomposition with period 12: centered 2x12 moving
// average for the trend (endpoints extended by repeating the nearest
// defined value), month-of-year means of the detrended series (centered)
// for the seasonal part.
Decomposition classical_decompose(const Eigen::VectorXd& series);

// OLS of log(price) on T monthly indicators plus H hedonic columns (no
// separate intercept), followed by classical_decompose on the monthly
// effects; the noise component is discarded.
// Throws DataError when a month in [0, T) has no transactions or when the
// design is rank deficient (message names the offending columns).
GlobalTrend estimate_global_trend(const TransactionSet& tx, int T, int H);

// CSV with columns month_index,g,trend,seasonal.
void write_trend_csv(std::ostream& os, const GlobalTrend& trend);
GlobalTrend read_trend_csv(std::istream& is);

}  // namespace hpi
