#include "cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hpi/errors.hpp"
#include "hpi/evaluate.hpp"
#include "hpi/fit.hpp"
#include "hpi/kalman.hpp"
#include "hpi/parallel.hpp"
#include "hpi/sampler.hpp"
#include "hpi/simulate.hpp"

namespace hpi::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// --- config plumbing ---------------------------------------------------------

json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file: " + path);
  try {
    json j;
    is >> j;
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
}

std::string config_hash(const json& cfg) {
  // FNV-1a 64 over the canonical dump (nlohmann sorts object keys).
  const std::string s = cfg.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t require_seed(const json& cfg) {
  if (!cfg.contains("seed")) throw ConfigError("seed is mandatory (config key or --seed)");
  return cfg.at("seed").get<std::uint64_t>();
}

fs::path require_out(const json& cfg) {
  const std::string out = cfg.value("out", "");
  if (out.empty()) throw ConfigError("output directory is mandatory (config key 'out' or --out)");
  fs::create_directories(out);
  return out;
}

struct Manifest {
  json config;
  std::string command;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  std::vector<std::string> outputs;

  void write(const fs::path& dir) const {
    json j;
    j["command"] = command;
    j["config"] = config;
    j["config_hash"] = config_hash(config);
    j["outputs"] = outputs;
    j["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    j["compiler"] = __VERSION__;
    j["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." +
                 std::to_string(EIGEN_MAJOR_VERSION) + "." +
                 std::to_string(EIGEN_MINOR_VERSION);
    std::ofstream os(dir / "manifest.json");
    os << j.dump(2) << "\n";
  }
};

void parse_anchor(const std::string& anchor, int* year, int* month) {
  if (anchor.size() != 7 || anchor[4] != '-')
    throw ConfigError("anchor must be YYYY-MM");
  *year = std::stoi(anchor.substr(0, 4));
  *month = std::stoi(anchor.substr(5, 2));
  if (*month < 1 || *month > 12) throw ConfigError("anchor month must be 01..12");
}

std::string format_month(int anchor_year, int anchor_month, int t) {
  const int total = (anchor_year * 12 + anchor_month - 1) + t;
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d", total / 12, total % 12 + 1);
  return buf;
}

ScenarioConfig scenario_from_json(const json& cfg, std::uint64_t seed) {
  ScenarioConfig sc;
  const json s = cfg.value("scenario", json::object());
  sc.p = s.value("p", sc.p);
  sc.T = s.value("T", sc.T);
  sc.H = s.value("H", sc.H);
  if (s.contains("cluster_sizes"))
    sc.cluster_sizes = s.at("cluster_sizes").get<std::vector<int>>();
  sc.mu_a = s.value("mu_a", sc.mu_a);
  sc.sigma_a_sq = s.value("sigma_a_sq", sc.sigma_a_sq);
  sc.mu_lambda = s.value("mu_lambda", sc.mu_lambda);
  sc.sigma_lambda_sq = s.value("sigma_lambda_sq", sc.sigma_lambda_sq);
  sc.sigma0_sq = s.value("sigma0_sq", sc.sigma0_sq);
  sc.R_lo = s.value("R_lo", sc.R_lo);
  sc.R_hi = s.value("R_hi", sc.R_hi);
  sc.beta_sd = s.value("beta_sd", sc.beta_sd);
  sc.obs_mean = s.value("obs_mean", sc.obs_mean);
  sc.obs_dispersion = s.value("obs_dispersion", sc.obs_dispersion);
  if (s.contains("fixed_counts")) sc.fixed_counts = s.at("fixed_counts").get<int>();
  sc.hedonic_log_mean = s.value("hedonic_log_mean", sc.hedonic_log_mean);
  sc.hedonic_log_sd = s.value("hedonic_log_sd", sc.hedonic_log_sd);
  sc.seed = seed;
  return sc;
}

HyperParams hyper_from_config(const json& cfg, int H) {
  HyperParams h = HyperParams::defaults(H);
  const json j = cfg.value("hyper", json::object());
  h.alpha_eps0 = j.value("alpha_eps0", h.alpha_eps0);
  h.beta_eps0 = j.value("beta_eps0", h.beta_eps0);
  h.alpha_R0 = j.value("alpha_R0", h.alpha_R0);
  h.beta_R0 = j.value("beta_R0", h.beta_R0);
  h.mu_lambda0 = j.value("mu_lambda0", h.mu_lambda0);
  h.sigma_lambda0_sq = j.value("sigma_lambda0_sq", h.sigma_lambda0_sq);
  h.mu_a0 = j.value("mu_a0", h.mu_a0);
  h.sigma_a0_sq = j.value("sigma_a0_sq", h.sigma_a0_sq);
  h.mu_h0 = j.value("mu_h0", h.mu_h0);
  h.sigma_h0_sq = j.value("sigma_h0_sq", h.sigma_h0_sq);
  h.alpha_lambda0 = j.value("alpha_lambda0", h.alpha_lambda0);
  h.beta_lambda0 = j.value("beta_lambda0", h.beta_lambda0);
  h.alpha_a0 = j.value("alpha_a0", h.alpha_a0);
  h.beta_a0 = j.value("beta_a0", h.beta_a0);
  h.alpha_h0 = j.value("alpha_h0", h.alpha_h0);
  h.beta_h0 = j.value("beta_h0", h.beta_h0);
  h.alpha_alpha = j.value("alpha_alpha", h.alpha_alpha);
  h.beta_alpha = j.value("beta_alpha", h.beta_alpha);
  h.init_state_var = j.value("init_state_var", h.init_state_var);
  // Starting values for the sampled hyperparameters.
  h.mu_lambda = j.value("mu_lambda", h.mu_lambda);
  h.sigma_lambda_sq = j.value("sigma_lambda_sq", h.sigma_lambda_sq);
  h.mu_a = j.value("mu_a", h.mu_a);
  h.sigma_a_sq = j.value("sigma_a_sq", h.sigma_a_sq);
  return h;
}

// --- simulate ----------------------------------------------------------------

int cmd_simulate(const json& cfg) {
  Manifest manifest{cfg, "simulate"};
  const std::uint64_t seed = require_seed(cfg);
  const fs::path out = require_out(cfg);
  const ScenarioConfig sc = scenario_from_json(cfg, seed);
  auto [panel, truth] = simulate_panel(sc);

  // Synthetic market level so the panel can be exported as raw
  // transactions: g_t = g0 * exp(slope * t + amp * sin(2 pi t / 12)).
  const json tr = cfg.value("trend", json::object());
  const double g0 = tr.value("g0", 300000.0);
  const double slope = tr.value("slope", 0.002);
  const double amp = tr.value("seasonal_amplitude", 0.01);
  GlobalTrend trend;
  trend.g.resize(sc.T);
  trend.trend_component.resize(sc.T);
  trend.seasonal_component.resize(sc.T);
  trend.monthly_effects.resize(sc.T);
  trend.hedonic_coeffs = Eigen::VectorXd::Zero(sc.H);
  for (int t = 0; t < sc.T; ++t) {
    trend.trend_component(t) = std::log(g0) + slope * t;
    trend.seasonal_component(t) = amp * std::sin(2.0 * M_PI * t / 12.0);
    trend.monthly_effects(t) = trend.trend_component(t) + trend.seasonal_component(t);
    trend.g(t) = std::exp(trend.monthly_effects(t));
  }

  int anchor_year = 1997, anchor_month = 1;
  parse_anchor(cfg.value("anchor", "1997-01"), &anchor_year, &anchor_month);

  {
    std::ofstream os(out / "transactions.csv");
    os << "region_id,sale_date,price";
    for (int h = 1; h <= sc.H; ++h) os << ",h" << h;
    os << "\n";
    char buf[64];
    for (int i = 0; i < panel.p; ++i)
      for (int t = 0; t < panel.T; ++t) {
        const Cell& c = panel.cell(i, t);
        for (int l = 0; l < c.count(); ++l) {
          const double price = trend.g(t) * std::exp(c.y[l] / panel.scale);
          os << panel.region_ids[i] << "," << format_month(anchor_year, anchor_month, t);
          std::snprintf(buf, sizeof(buf), ",%.17g", price);
          os << buf;
          for (int h = 0; h < sc.H; ++h) {
            std::snprintf(buf, sizeof(buf), ",%.17g", c.u[l](h));
            os << buf;
          }
          os << "\n";
        }
      }
    manifest.outputs.push_back((out / "transactions.csv").string());
  }
  {
    std::ofstream os(out / "panel.csv");
    write_panel_csv(os, panel);
    manifest.outputs.push_back((out / "panel.csv").string());
  }
  {
    std::ofstream os(out / "trend.csv");
    write_trend_csv(os, trend);
    manifest.outputs.push_back((out / "trend.csv").string());
  }
  {
    json jt;
    jt["z_true"] = truth.z_true;
    auto vec = [](const Eigen::VectorXd& v) {
      json a = json::array();
      for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
      return a;
    };
    auto mat = [](const Eigen::MatrixXd& m) {
      json rows = json::array();
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
      }
      return rows;
    };
    jt["x_true"] = mat(truth.x_true);
    jt["eta_true"] = mat(truth.eta_true);
    jt["lambda_true"] = vec(truth.lambda_true);
    jt["a_true"] = vec(truth.a_true);
    jt["beta_true"] = mat(truth.beta_true);
    jt["R_true"] = vec(truth.R_true);
    jt["sigma0_true"] = truth.sigma0_true;
    std::ofstream os(out / "truth.json");
    os << jt.dump();
    manifest.outputs.push_back((out / "truth.json").string());
  }
  manifest.write(out);
  std::cout << "simulate: " << panel.p << " regions, " << panel.T << " months, "
            << panel.total_obs_count() << " observations -> " << out.string() << "\n";
  return 0;
}

// --- fit ----------------------------------------------------------------------

StreamPanel load_fit_panel(const json& cfg, const fs::path& out, Manifest& manifest) {
  const double scale = cfg.value("scale", 200.0);
  if (cfg.contains("panel")) {
    std::ifstream is(cfg.at("panel").get<std::string>());
    if (!is) throw DataError("cannot read panel: " + cfg.at("panel").get<std::string>());
    return read_panel_csv(is, cfg.value("T", -1), scale);
  }
  if (!cfg.contains("transactions"))
    throw ConfigError("fit needs either 'panel' or 'transactions'");
  CsvSchema schema;
  schema.region_column = cfg.value("region_column", schema.region_column);
  schema.date_column = cfg.value("date_column", schema.date_column);
  schema.price_column = cfg.value("price_column", schema.price_column);
  if (!cfg.contains("hedonic_columns"))
    throw ConfigError("fit from transactions needs 'hedonic_columns'");
  schema.hedonic_columns = cfg.at("hedonic_columns").get<std::vector<std::string>>();
  parse_anchor(cfg.value("anchor", "1997-01"), &schema.anchor_year,
               &schema.anchor_month);
  std::ifstream is(cfg.at("transactions").get<std::string>());
  if (!is)
    throw DataError("cannot read transactions: " + cfg.at("transactions").get<std::string>());
  TransactionSet tx = parse_transactions(is, schema);
  if (tx.rows.empty()) throw DataError("no valid transactions parsed");
  int T = cfg.value("T", -1);
  if (T < 0) {
    for (const auto& r : tx.rows) T = std::max(T, r.month);
    T += 1;
  }
  const GlobalTrend trend =
      estimate_global_trend(tx, T, static_cast<int>(schema.hedonic_columns.size()));
  {
    std::ofstream os(out / "trend.csv");
    write_trend_csv(os, trend);
    manifest.outputs.push_back((out / "trend.csv").string());
  }
  if (!tx.rejects.empty())
    std::cerr << "fit: rejected " << tx.rejects.size() << " transaction rows\n";
  return detrend_and_bin(tx, trend, scale);
}

int cmd_fit(const json& cfg) {
  Manifest manifest{cfg, "fit"};
  const std::uint64_t seed = require_seed(cfg);
  const fs::path out = require_out(cfg);

  StreamPanel panel = load_fit_panel(cfg, out, manifest);

  const double holdout = cfg.value("holdout_fraction", 0.0);
  TestSet test;
  if (holdout > 0.0) {
    Rng split_rng = Rng::derive(seed, 999);
    auto [train, t] = holdout_split(panel, holdout, split_rng);
    panel = std::move(train);
    test = std::move(t);
    std::ofstream os(out / "test.csv");
    os << "region_id,month_index,y";
    for (int h = 1; h <= panel.H; ++h) os << ",u_" << h;
    os << "\n";
    char buf[64];
    for (const auto& o : test.obs) {
      os << panel.region_ids[o.region] << "," << o.month;
      std::snprintf(buf, sizeof(buf), ",%.17g", o.y);
      os << buf;
      for (int h = 0; h < panel.H; ++h) {
        std::snprintf(buf, sizeof(buf), ",%.17g", o.u(h));
        os << buf;
      }
      os << "\n";
    }
    manifest.outputs.push_back((out / "test.csv").string());
  }

  FitOptions opts;
  opts.iterations = cfg.value("iterations", 1000);
  opts.burn_in = cfg.value("burn_in", opts.iterations / 2);
  opts.thinning = cfg.value("thinning", 5);
  opts.workers = cfg.value("workers", 1);
  opts.checkpoint_every = cfg.value("checkpoint_every", 0);
  opts.sweep.sample_assignments = !cfg.value("no_clustering", false);
  opts.hyper = hyper_from_config(cfg, panel.H);
  // Invocation-level controls stay out of the hash so an interrupted run
  // and its resume agree on the checkpoint identity.
  json hash_cfg = cfg;
  hash_cfg.erase("stop_after");
  hash_cfg.erase("resume");
  hash_cfg.erase("out");
  opts.config_hash = config_hash(hash_cfg);
  const int chains = cfg.value("chains", 1);
  const int stop_after = cfg.value("stop_after", 0);
  const bool resume = cfg.value("resume", false);

  FitOptions run_opts = opts;
  if (stop_after > 0) run_opts.iterations = std::min(opts.iterations, stop_after);

  ChainArchive archive;
  archive.config_hash = opts.config_hash;
  archive.p = panel.p;
  archive.T = panel.T;
  archive.H = panel.H;
  archive.scale = panel.scale;
  archive.workers = opts.workers;
  archive.region_ids = panel.region_ids;
  for (int c = 0; c < chains; ++c) {
    FitOptions chain_opts = run_opts;
    const fs::path ckpt = out / ("chain" + std::to_string(c) + ".checkpoint.json");
    if (chain_opts.checkpoint_every > 0) chain_opts.checkpoint_path = ckpt.string();
    const std::uint64_t chain_seed = Rng::derive(seed, 1000 + c).next_u64();
    ChainResult result;
    if (resume && fs::exists(ckpt))
      result = resume_chain(panel, chain_opts, ckpt.string());
    else
      result = run_chain(panel, chain_opts, chain_seed);
    std::cout << "fit: chain " << c << " done, " << result.samples.size()
              << " samples, " << result.wall_seconds << " s\n";
    archive.chains.push_back(std::move(result));
  }

  save_archive((out / "archive.json").string(), archive);
  manifest.outputs.push_back((out / "archive.json").string());
  manifest.config["effective_iterations"] = run_opts.iterations;
  manifest.write(out);
  return 0;
}

// --- bench ---------------------------------------------------------------------

int cmd_bench(const json& cfg) {
  Manifest manifest{cfg, "bench"};
  const std::uint64_t seed = require_seed(cfg);
  const fs::path out = require_out(cfg);
  const json prof = cfg.value("profile", json::object());

  ScenarioConfig sc;
  sc.p = prof.value("p_k", 21);
  sc.cluster_sizes = {sc.p};
  sc.T = prof.value("T", 195);
  sc.H = prof.value("H", 3);
  sc.obs_mean = prof.value("obs_mean", 3.9);
  sc.mu_a = 0.99;
  sc.sigma_a_sq = 1e-4;
  sc.mu_lambda = 0.15;
  sc.sigma_lambda_sq = 2.5e-3;
  sc.sigma0_sq = 1e-3;
  sc.seed = seed;
  auto [panel, truth] = simulate_panel(sc);
  refresh_suffstats(panel, truth.beta_true);

  ClusterView view;
  view.members.resize(sc.p);
  for (int i = 0; i < sc.p; ++i) view.members[i] = i;
  view.a = truth.a_true;
  view.lambda = truth.lambda_true;
  view.sigma0_sq = truth.sigma0_true;
  view.R = truth.R_true;
  view.beta = truth.beta_true;
  const InitialStatePrior init = default_init(view, 4.0);

  const int repeats = cfg.value("repeats", 1000);
  using clock = std::chrono::steady_clock;

  double acc_naive = 0.0, acc_suff = 0.0;
  double ll_naive = 0.0, ll_suff = 0.0;
  double max_diff = 0.0;
  // Warmup plus value check.
  ll_naive = marginal_loglik_naive(view, panel, init);
  ll_suff = marginal_loglik_suffstat(view, panel, init);

  const auto t0 = clock::now();
  for (int r = 0; r < repeats; ++r) acc_naive += marginal_loglik_naive(view, panel, init);
  const auto t1 = clock::now();
  for (int r = 0; r < repeats; ++r) acc_suff += marginal_loglik_suffstat(view, panel, init);
  const auto t2 = clock::now();
  max_diff = std::abs(acc_naive / repeats - acc_suff / repeats);

  const double naive_s = std::chrono::duration<double>(t1 - t0).count();
  const double suff_s = std::chrono::duration<double>(t2 - t1).count();
  const double rel_diff = max_diff / std::abs(ll_naive);

  json report;
  report["p_k"] = sc.p;
  report["T"] = sc.T;
  report["observations"] = panel.total_obs_count();
  report["repeats"] = repeats;
  report["naive_seconds"] = naive_s;
  report["suffstat_seconds"] = suff_s;
  report["speedup"] = naive_s / suff_s;
  report["loglik_naive"] = ll_naive;
  report["loglik_suffstat"] = ll_suff;
  report["relative_difference"] = rel_diff;
  report["values_agree_1e8"] = rel_diff <= 1e-8;
  {
    std::ofstream os(out / "bench.json");
    os << report.dump(2) << "\n";
    manifest.outputs.push_back((out / "bench.json").string());
  }
  manifest.write(out);
  std::cout << "bench: " << panel.total_obs_count() << " obs, naive " << naive_s
            << " s, suffstat " << suff_s << " s, speedup "
            << naive_s / suff_s << "x, rel diff " << rel_diff << "\n";
  return 0;
}

// --- index / predict / diag -----------------------------------------------------

int cmd_index(const json& cfg) {
  Manifest manifest{cfg, "index"};
  const fs::path out = require_out(cfg);
  if (!cfg.contains("archive")) throw ConfigError("index needs 'archive'");
  const ChainArchive archive = load_archive(cfg.at("archive").get<std::string>());
  const IndexSummary summary = index_summary(archive);
  {
    std::ofstream os(out / "index.csv");
    os << "region_id,month_index,mean,lo95,hi95\n";
    char buf[128];
    for (int i = 0; i < archive.p; ++i)
      for (int t = 0; t < archive.T; ++t) {
        std::snprintf(buf, sizeof(buf), "%s,%d,%.17g,%.17g,%.17g\n",
                      archive.region_ids[i].c_str(), t, summary.mean(i, t),
                      summary.lo95(i, t), summary.hi95(i, t));
        os << buf;
      }
    manifest.outputs.push_back((out / "index.csv").string());
  }
  {
    std::ofstream os(out / "cooccurrence.csv");
    for (int i = 0; i < archive.p; ++i) {
      for (int j = 0; j < archive.p; ++j)
        os << (j ? "," : "") << summary.cooccurrence(i, j);
      os << "\n";
    }
    manifest.outputs.push_back((out / "cooccurrence.csv").string());
  }
  manifest.write(out);
  std::cout << "index: wrote " << archive.p * archive.T << " rows\n";
  return 0;
}

int cmd_predict(const json& cfg) {
  Manifest manifest{cfg, "predict"};
  const std::uint64_t seed = require_seed(cfg);
  const fs::path out = require_out(cfg);
  if (!cfg.contains("archive") || !cfg.contains("test") || !cfg.contains("trend"))
    throw ConfigError("predict needs 'archive', 'test', and 'trend'");
  const ChainArchive archive = load_archive(cfg.at("archive").get<std::string>());
  GlobalTrend trend;
  {
    std::ifstream is(cfg.at("trend").get<std::string>());
    if (!is) throw DataError("cannot read trend: " + cfg.at("trend").get<std::string>());
    trend = read_trend_csv(is);
  }
  TestSet test;
  {
    std::ifstream is(cfg.at("test").get<std::string>());
    if (!is) throw DataError("cannot read test set: " + cfg.at("test").get<std::string>());
    const StreamPanel test_panel = read_panel_csv(is, archive.T, archive.scale);
    for (int li = 0; li < test_panel.p; ++li) {
      const int i = [&] {
        for (int k = 0; k < archive.p; ++k)
          if (archive.region_ids[k] == test_panel.region_ids[li]) return k;
        throw DataError("test region not present in archive: " +
                        test_panel.region_ids[li]);
      }();
      for (int t = 0; t < test_panel.T; ++t) {
        const Cell& c = test_panel.cell(li, t);
        for (int l = 0; l < c.count(); ++l) test.obs.push_back({i, t, c.y[l], c.u[l]});
      }
    }
  }

  std::ofstream os(out / "predictions.csv");
  os << "region_id,month_index,truth_price,pred_price,lo95,hi95\n";
  manifest.outputs.push_back((out / "predictions.csv").string());
  if (!test.obs.empty()) {
    Rng rng = Rng::derive(seed, 7);
    const auto preds = predict_prices(archive, test, trend, rng,
                                      cfg.value("sims_per_sample", 4));
    char buf[160];
    std::vector<double> pred_v, truth_v;
    for (const auto& pr : preds) {
      std::snprintf(buf, sizeof(buf), "%s,%d,%.17g,%.17g,%.17g,%.17g\n",
                    archive.region_ids[pr.region].c_str(), pr.month, pr.truth_price,
                    pr.mean_price, pr.lo95, pr.hi95);
      os << buf;
      pred_v.push_back(pr.mean_price);
      truth_v.push_back(pr.truth_price);
    }
    const Metrics m = compute_metrics(pred_v, truth_v);
    json jm{{"rmse", m.rmse},
            {"mean_ape", m.mean_ape},
            {"median_ape", m.median_ape},
            {"ape90", m.ape90},
            {"p10", m.p10},
            {"n", preds.size()}};
    std::ofstream ms(out / "metrics.json");
    ms << jm.dump(2) << "\n";
    manifest.outputs.push_back((out / "metrics.json").string());
    std::cout << "predict: " << preds.size() << " predictions, rmse " << m.rmse
              << ", p10 " << m.p10 << "\n";
  } else {
    std::cout << "predict: empty test set, wrote header only\n";
  }
  manifest.write(out);
  return 0;
}

int cmd_diag(const json& cfg) {
  Manifest manifest{cfg, "diag"};
  const std::uint64_t seed = cfg.value("seed", 1);
  const fs::path out = require_out(cfg);
  if (!cfg.contains("archive")) throw ConfigError("diag needs 'archive'");
  const ChainArchive archive = load_archive(cfg.at("archive").get<std::string>());
  if (archive.chains.size() < 2)
    throw DataError("diag needs an archive with at least 2 chains");
  std::size_t n_samples = archive.chains[0].samples.size();
  for (const auto& c : archive.chains)
    if (c.samples.size() != n_samples)
      throw DataError("diag: chains have unequal sample counts");
  if (n_samples < 2) throw DataError("diag: not enough samples");

  auto series = [&](auto&& extract) {
    std::vector<std::vector<double>> chains;
    for (const auto& c : archive.chains) {
      std::vector<double> v;
      v.reserve(c.samples.size());
      for (const auto& s : c.samples) v.push_back(extract(s));
      chains.push_back(std::move(v));
    }
    return chains;
  };

  json rhat;
  rhat["sigma0_sq"] = psrf(series([](const Sample& s) { return s.sigma0_sq; }));
  rhat["K"] = psrf(series([](const Sample& s) { return double(s.K); }));
  rhat["alpha"] = psrf(series([](const Sample& s) { return s.alpha; }));
  Rng rng = Rng::derive(seed, 13);
  const int monitors = std::min(5, archive.p);
  std::vector<int> picks;
  while (static_cast<int>(picks.size()) < monitors) {
    const int i = static_cast<int>(rng.uniform_index(archive.p));
    if (std::find(picks.begin(), picks.end(), i) == picks.end()) picks.push_back(i);
  }
  for (const int i : picks) {
    const int t = archive.T - 1;
    rhat["x_last_" + archive.region_ids[i]] =
        psrf(series([&](const Sample& s) { return s.x(i, t); }));
  }

  json j;
  j["rhat"] = rhat;
  j["threshold"] = cfg.value("rhat_threshold", 1.1);
  bool converged = true;
  for (const auto& [k, v] : rhat.items())
    if (v.get<double>() > j["threshold"].get<double>()) converged = false;
  j["converged"] = converged;
  json chains = json::array();
  for (const auto& c : archive.chains)
    chains.push_back({{"seed", c.seed},
                      {"wall_seconds", c.wall_seconds},
                      {"samples", c.samples.size()},
                      {"phase_local_seconds", c.phase_totals.local_seconds},
                      {"phase_global_seconds", c.phase_totals.global_seconds},
                      {"phase_shared_seconds", c.phase_totals.shared_seconds}});
  j["chains"] = chains;
  j["workers"] = archive.workers;
  {
    std::ofstream os(out / "diag.json");
    os << j.dump(2) << "\n";
    manifest.outputs.push_back((out / "diag.json").string());
  }
  manifest.write(out);
  std::cout << "diag: " << rhat.size() << " monitored scalars, converged="
            << (converged ? "true" : "false") << "\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Latent regional price index from sparse transaction streams"};
  app.require_subcommand(1);

  struct Common {
    std::string config_path;
    std::string out;
    std::int64_t seed = -1;
  };
  auto add_common = [](CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config_path, "JSON config file");
    sub->add_option("--out", c.out, "output directory");
    sub->add_option("--seed", c.seed, "root RNG seed");
  };

  Common c_sim, c_fit, c_bench, c_index, c_predict, c_diag;
  auto* sim = app.add_subcommand("simulate", "generate a synthetic panel");
  add_common(sim, c_sim);
  auto* fit = app.add_subcommand("fit", "run MCMC chains");
  add_common(fit, c_fit);
  std::string fit_panel, fit_tx;
  int fit_iterations = -1, fit_chains = -1, fit_workers = -1, fit_stop_after = -1;
  bool fit_resume = false, fit_no_clustering = false;
  fit->add_option("--panel", fit_panel, "panel CSV input");
  fit->add_option("--transactions", fit_tx, "transactions CSV input");
  fit->add_option("--iterations", fit_iterations, "sweeps per chain");
  fit->add_option("--chains", fit_chains, "number of chains");
  fit->add_option("--workers", fit_workers, "parallel workers P");
  fit->add_option("--stop-after", fit_stop_after, "stop this invocation after N sweeps");
  fit->add_flag("--resume", fit_resume, "resume from checkpoints in the out dir");
  fit->add_flag("--no-clustering", fit_no_clustering, "freeze singleton clusters");
  auto* bench = app.add_subcommand("bench", "time the two filter implementations");
  add_common(bench, c_bench);
  int bench_repeats = -1;
  bench->add_option("--repeats", bench_repeats, "likelihood evaluations per filter");
  auto* index = app.add_subcommand("index", "export posterior index CSV");
  add_common(index, c_index);
  std::string index_archive;
  index->add_option("--archive", index_archive, "archive JSON");
  auto* predict = app.add_subcommand("predict", "posterior predictive prices");
  add_common(predict, c_predict);
  std::string pr_archive, pr_test, pr_trend;
  predict->add_option("--archive", pr_archive, "archive JSON");
  predict->add_option("--test", pr_test, "held-out panel CSV");
  predict->add_option("--trend", pr_trend, "trend CSV");
  auto* diag = app.add_subcommand("diag", "convergence diagnostics");
  add_common(diag, c_diag);
  std::string diag_archive;
  diag->add_option("--archive", diag_archive, "archive JSON with >= 2 chains");

  std::vector<const char*> argv;
  argv.push_back("hpindex");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    auto merged = [&](const Common& c, CLI::App* sub) {
      json cfg = load_config_file(c.config_path);
      if (sub->count("--out")) cfg["out"] = c.out;
      if (sub->count("--seed")) cfg["seed"] = c.seed;
      return cfg;
    };
    if (sim->parsed()) return cmd_simulate(merged(c_sim, sim));
    if (fit->parsed()) {
      json cfg = merged(c_fit, fit);
      if (fit->count("--panel")) cfg["panel"] = fit_panel;
      if (fit->count("--transactions")) cfg["transactions"] = fit_tx;
      if (fit->count("--iterations")) cfg["iterations"] = fit_iterations;
      if (fit->count("--chains")) cfg["chains"] = fit_chains;
      if (fit->count("--workers")) cfg["workers"] = fit_workers;
      if (fit->count("--stop-after")) cfg["stop_after"] = fit_stop_after;
      if (fit_resume) cfg["resume"] = true;
      if (fit_no_clustering) cfg["no_clustering"] = true;
      return cmd_fit(cfg);
    }
    if (bench->parsed()) {
      json cfg = merged(c_bench, bench);
      if (bench->count("--repeats")) cfg["repeats"] = bench_repeats;
      return cmd_bench(cfg);
    }
    if (index->parsed()) {
      json cfg = merged(c_index, index);
      if (index->count("--archive")) cfg["archive"] = index_archive;
      return cmd_index(cfg);
    }
    if (predict->parsed()) {
      json cfg = merged(c_predict, predict);
      if (predict->count("--archive")) cfg["archive"] = pr_archive;
      if (predict->count("--test")) cfg["test"] = pr_test;
      if (predict->count("--trend")) cfg["trend"] = pr_trend;
      return cmd_predict(cfg);
    }
    if (diag->parsed()) {
      json cfg = merged(c_diag, diag);
      if (diag->count("--archive")) cfg["archive"] = diag_archive;
      return cmd_diag(cfg);
    }
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace hpi::cli
