#include "hpi/panel.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>

#include "hpi/errors.hpp"

namespace hpi {

int StreamPanel::region_obs_count(int i) const {
  int m = 0;
  for (int t = 0; t < T; ++t) m += cell(i, t).count();
  return m;
}

int StreamPanel::total_obs_count() const {
  int m = 0;
  for (const auto& c : cells) m += c.count();
  return m;
}

int StreamPanel::region_index(const std::string& id) const {
  const auto it = std::find(region_ids.begin(), region_ids.end(), id);
  return it == region_ids.end() ? -1 : static_cast<int>(it - region_ids.begin());
}

namespace {

void init_cell_aggregates(Cell& c, int H) {
  c.u_sum = Eigen::VectorXd::Zero(H);
  c.uy_sum = Eigen::VectorXd::Zero(H);
  c.uu_sum = Eigen::MatrixXd::Zero(H, H);
  c.y_sum = c.yy_sum = 0.0;
  for (std::size_t l = 0; l < c.y.size(); ++l) {
    c.y_sum += c.y[l];
    c.yy_sum += c.y[l] * c.y[l];
    c.u_sum += c.u[l];
    c.uy_sum += c.u[l] * c.y[l];
    c.uu_sum += c.u[l] * c.u[l].transpose();
  }
}

void refresh_cell(Cell& c, const Eigen::VectorXd& beta_row) {
  const int L = c.count();
  if (L == 0) {
    c.psi_bar = 0.0;
    c.psi_sqsum = 0.0;
    return;
  }
  // psi_l = y_l - beta'u_l; the cell aggregates give the sums exactly.
  const double bu = beta_row.dot(c.u_sum);
  c.psi_bar = (c.y_sum - bu) / L;
  c.psi_sqsum = c.yy_sum - 2.0 * beta_row.dot(c.uy_sum) +
                beta_row.dot(c.uu_sum * beta_row);
}

}  // namespace

StreamPanel detrend_and_bin(const TransactionSet& tx, const GlobalTrend& trend,
                            double scale,
                            const std::vector<std::string>& expected_regions) {
  const int T = trend.num_months();
  const int H = tx.hedonic_dim;

  std::map<std::string, int> counts;
  for (const auto& id : expected_regions) counts[id] = 0;
  for (const auto& row : tx.rows) counts[row.region_id] += 1;

  StreamPanel panel;
  panel.T = T;
  panel.H = H;
  panel.scale = scale;
  for (const auto& [id, n] : counts) {
    if (n > 0)
      panel.region_ids.push_back(id);
    else
      panel.excluded_regions.push_back(id);
  }
  panel.p = static_cast<int>(panel.region_ids.size());
  panel.cells.assign(static_cast<std::size_t>(panel.p) * T, Cell{});

  std::map<std::string, int> index;
  for (int i = 0; i < panel.p; ++i) index[panel.region_ids[i]] = i;
  for (const auto& row : tx.rows) {
    if (row.month < 0 || row.month >= T)
      throw DataError("detrend_and_bin: transaction month not covered by the trend");
    const double y = scale * (std::log(row.price) - std::log(trend.g(row.month)));
    Cell& c = panel.cell(index[row.region_id], row.month);
    c.y.push_back(y);
    c.u.push_back(row.hedonics);
  }
  for (auto& c : panel.cells) init_cell_aggregates(c, H);
  refresh_suffstats(panel, Eigen::MatrixXd::Zero(panel.p, H));
  return panel;
}

StreamPanel build_panel(int p, int T, int H, const std::vector<RawObs>& obs,
                        std::vector<std::string> region_ids, double scale) {
  StreamPanel panel;
  panel.p = p;
  panel.T = T;
  panel.H = H;
  panel.scale = scale;
  if (region_ids.empty())
    for (int i = 0; i < p; ++i) region_ids.push_back("r" + std::to_string(i));
  if (static_cast<int>(region_ids.size()) != p)
    throw DimensionError("build_panel: region_ids size mismatch");
  panel.region_ids = std::move(region_ids);
  panel.cells.assign(static_cast<std::size_t>(p) * T, Cell{});
  for (const auto& o : obs) {
    if (o.region < 0 || o.region >= p || o.month < 0 || o.month >= T)
      throw DimensionError("build_panel: observation outside the panel");
    if (o.u.size() != H) throw DimensionError("build_panel: hedonics dimension mismatch");
    Cell& c = panel.cell(o.region, o.month);
    c.y.push_back(o.y);
    c.u.push_back(o.u);
  }
  for (auto& c : panel.cells) init_cell_aggregates(c, H);
  refresh_suffstats(panel, Eigen::MatrixXd::Zero(p, H));
  return panel;
}

void refresh_suffstats(StreamPanel& panel, const Eigen::MatrixXd& beta) {
  if (beta.rows() != panel.p || beta.cols() != panel.H)
    throw DimensionError("refresh_suffstats: beta must be p x H");
  for (int i = 0; i < panel.p; ++i) {
    const Eigen::VectorXd row = beta.row(i);
    for (int t = 0; t < panel.T; ++t) refresh_cell(panel.cell(i, t), row);
  }
}

void refresh_region_suffstats(StreamPanel& panel, int region,
                              const Eigen::VectorXd& beta_row) {
  if (region < 0 || region >= panel.p)
    throw DimensionError("refresh_region_suffstats: bad region index");
  if (beta_row.size() != panel.H)
    throw DimensionError("refresh_region_suffstats: beta row must have length H");
  for (int t = 0; t < panel.T; ++t) refresh_cell(panel.cell(region, t), beta_row);
}

void write_panel_csv(std::ostream& os, const StreamPanel& panel) {
  os << "region_id,month_index,y";
  for (int h = 1; h <= panel.H; ++h) os << ",u_" << h;
  os << "\n";
  char buf[64];
  for (int i = 0; i < panel.p; ++i)
    for (int t = 0; t < panel.T; ++t) {
      const Cell& c = panel.cell(i, t);
      for (int l = 0; l < c.count(); ++l) {
        os << panel.region_ids[i] << "," << t;
        std::snprintf(buf, sizeof(buf), ",%.17g", c.y[l]);
        os << buf;
        for (int h = 0; h < panel.H; ++h) {
          std::snprintf(buf, sizeof(buf), ",%.17g", c.u[l](h));
          os << buf;
        }
        os << "\n";
      }
    }
}

StreamPanel read_panel_csv(std::istream& is, int T, double scale) {
  std::string line;
  if (!std::getline(is, line)) throw DataError("panel CSV is empty");
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "region_id")
    throw DataError("panel CSV: unexpected header");
  const int H = static_cast<int>(header.size()) - 3;

  struct Row {
    std::string id;
    int t;
    double y;
    Eigen::VectorXd u;
  };
  std::vector<Row> rows;
  int max_month = -1;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (static_cast<int>(f.size()) != 3 + H)
      throw DataError("panel CSV: malformed row");
    Row r;
    r.id = f[0];
    r.t = std::stoi(f[1]);
    r.y = std::stod(f[2]);
    r.u.resize(H);
    for (int h = 0; h < H; ++h) r.u(h) = std::stod(f[3 + h]);
    max_month = std::max(max_month, r.t);
    rows.push_back(std::move(r));
  }
  if (T < 0) T = max_month + 1;

  std::map<std::string, int> index;
  std::vector<std::string> ids;
  for (const auto& r : rows)
    if (index.emplace(r.id, static_cast<int>(index.size())).second)
      ids.push_back(r.id);
  std::vector<RawObs> obs;
  obs.reserve(rows.size());
  for (auto& r : rows)
    obs.push_back({index[r.id], r.t, r.y, std::move(r.u)});
  return build_panel(static_cast<int>(ids.size()), T, H, obs, ids, scale);
}

}  // namespace hpi
