#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "hpi/transactions.hpp"
#include "hpi/trend.hpp"

namespace hpi {

// One (region, month) cell: raw detrended observations plus sufficient
// statistics of the hedonic-adjusted prices psi = y - beta'u under the
// panel's current beta. The *_agg fields are beta-independent aggregates
// that let refresh_suffstats run in O(H^2) per cell.
struct Cell {
  std::vector<double> y;            // detrended scaled log prices
  std::vector<Eigen::VectorXd> u;   // hedonics per observation

  // beta-dependent, maintained by refresh_suffstats:
  double psi_bar = 0.0;   // mean of psi over the cell
  double psi_sqsum = 0.0; // sum of psi^2 over the cell

  // beta-independent aggregates:
  double y_sum = 0.0;
  double yy_sum = 0.0;
  Eigen::VectorXd u_sum;   // H
  Eigen::VectorXd uy_sum;  // H
  Eigen::MatrixXd uu_sum;  // H x H

  int count() const { return static_cast<int>(y.size()); }
};

struct StreamPanel {
  int p = 0;  // regions
  int T = 0;  // months
  int H = 0;  // hedonic dimension
  double scale = 200.0;  // multiplier applied to log-price deviations
  std::vector<std::string> region_ids;          // size p
  std::vector<std::string> excluded_regions;    // zero-transaction regions
  std::vector<Cell> cells;                      // p*T, row-major by region

  Cell& cell(int i, int t) { return cells[static_cast<std::size_t>(i) * T + t]; }
  const Cell& cell(int i, int t) const {
    return cells[static_cast<std::size_t>(i) * T + t];
  }
  int region_obs_count(int i) const;
  int total_obs_count() const;
  int region_index(const std::string& id) const;  // -1 when absent
};

// Bins transactions into per-region monthly streams of
// y = scale * (log price - log g_t). Regions with no transactions at all
// (members of expected_regions that never appear in tx) are dropped and
// recorded in excluded_regions. Sufficient statistics are initialized with
// beta = 0.
StreamPanel detrend_and_bin(const TransactionSet& tx, const GlobalTrend& trend,
                            double scale = 200.0,
                            const std::vector<std::string>& expected_regions = {});

// Builds a panel directly from already-detrended observations
// (region index, month, y, hedonics). Used by the simulator and tests.
struct RawObs {
  int region = 0;
  int month = 0;
  double y = 0.0;
  Eigen::VectorXd u;
};
StreamPanel build_panel(int p, int T, int H, const std::vector<RawObs>& obs,
                        std::vector<std::string> region_ids = {},
                        double scale = 200.0);

// Recomputes psi_bar and psi_sqsum for every cell under the given
// per-region hedonic coefficients (p x H). Throws DimensionError on a
// shape mismatch.
void refresh_suffstats(StreamPanel& panel, const Eigen::MatrixXd& beta);
// Same, restricted to one region; safe to call concurrently for distinct
// regions.
void refresh_region_suffstats(StreamPanel& panel, int region,
                              const Eigen::VectorXd& beta_row);

// CSV with columns region_id,month_index,y,u_1..u_H.
void write_panel_csv(std::ostream& os, const StreamPanel& panel);
StreamPanel read_panel_csv(std::istream& is, int T = -1, double scale = 200.0);

}  // namespace hpi
