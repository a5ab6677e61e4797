#include "hpi/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <thread>

#include "hpi/errors.hpp"
#include "hpi/math.hpp"

namespace hpi {

ClusterSizeHistogram ClusterSizeHistogram::build(const std::vector<int>& z,
                                                 const ProcessorAllocation& alloc) {
  check_allocation(z, alloc);
  const int K = z.empty() ? 0 : *std::max_element(z.begin(), z.end()) + 1;
  std::vector<int> size(K, 0), worker(K, -1);
  for (std::size_t i = 0; i < z.size(); ++i) {
    size[z[i]] += 1;
    worker[z[i]] = alloc.gamma[i];
  }
  ClusterSizeHistogram h;
  h.counts.resize(alloc.P);
  for (int k = 0; k < K; ++k) h.counts[worker[k]][size[k]] += 1;
  return h;
}

int ClusterSizeHistogram::worker_load(int j) const {
  int load = 0;
  for (const auto& [s, n] : counts.at(j)) load += s * n;
  return load;
}

void check_allocation(const std::vector<int>& z, const ProcessorAllocation& alloc) {
  if (alloc.gamma.size() != z.size())
    throw DataError("allocation: gamma length does not match stream count");
  const int K = z.empty() ? 0 : *std::max_element(z.begin(), z.end()) + 1;
  std::vector<int> owner(K, -1);
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (alloc.gamma[i] < 0 || alloc.gamma[i] >= alloc.P)
      throw DataError("allocation: worker id out of range");
    int& w = owner[z[i]];
    if (w == -1)
      w = alloc.gamma[i];
    else if (w != alloc.gamma[i])
      throw DataError("allocation: cluster " + std::to_string(z[i]) +
                      " spans multiple workers");
  }
}

ProcessorAllocation init_allocation(int p, int P, double alpha, Rng& rng) {
  if (P < 1) throw ConfigError("init_allocation: P must be >= 1");
  if (!(alpha > 0.0)) throw ConfigError("init_allocation: alpha must be positive");
  ProcessorAllocation alloc;
  alloc.P = P;
  alloc.gamma.assign(p, 0);
  if (P == 1) return alloc;
  Eigen::VectorXd phi(P);
  for (int j = 0; j < P; ++j) phi(j) = rng.gamma(alpha / P, 1.0);
  phi /= phi.sum();
  for (int i = 0; i < p; ++i) {
    const double u = rng.uniform();
    double acc = 0.0;
    int j = P - 1;
    for (int jj = 0; jj < P; ++jj) {
      acc += phi(jj);
      if (u < acc) {
        j = jj;
        break;
      }
    }
    alloc.gamma[i] = j;
  }
  return alloc;
}

double allocation_log_conditional(const std::vector<int>& z,
                                  const ProcessorAllocation& alloc, double alpha) {
  check_allocation(z, alloc);
  const int P = alloc.P;
  const double theta = alpha / P;
  const int K = z.empty() ? 0 : *std::max_element(z.begin(), z.end()) + 1;
  std::vector<int> size(K, 0), worker(K, -1);
  for (std::size_t i = 0; i < z.size(); ++i) {
    size[z[i]] += 1;
    worker[z[i]] = alloc.gamma[i];
  }
  std::vector<int> load(P, 0), nclust(P, 0);
  for (int k = 0; k < K; ++k) {
    load[worker[k]] += size[k];
    nclust[worker[k]] += 1;
  }
  // Allocation mass (Dirichlet-multinomial over worker loads) times the
  // per-worker CRP(theta) partition mass.
  double total = 0.0;
  for (int j = 0; j < P; ++j) {
    total += std::lgamma(theta + load[j]) - std::lgamma(theta);  // p(gamma)
    total += nclust[j] * std::log(theta) + std::lgamma(theta) -
             std::lgamma(theta + load[j]);  // partition normalizer
  }
  for (int k = 0; k < K; ++k) total += std::lgamma(double(size[k]));
  return total;
}

bool global_reassign(const std::vector<int>& z, int K, ProcessorAllocation& alloc,
                     double alpha, Rng& rng, double* log_ratio_out) {
  check_allocation(z, alloc);
  std::vector<int> proposal(K);
  for (int k = 0; k < K; ++k)
    proposal[k] = static_cast<int>(rng.uniform_index(alloc.P));

  ProcessorAllocation prop = alloc;
  for (std::size_t i = 0; i < z.size(); ++i) prop.gamma[i] = proposal[z[i]];

  const double log_ratio = allocation_log_conditional(z, prop, alpha) -
                           allocation_log_conditional(z, alloc, alpha);
  if (log_ratio_out) *log_ratio_out = log_ratio;
  const bool accept = std::log(rng.uniform()) < log_ratio;
  if (accept) alloc = std::move(prop);
  return accept;
}

namespace {

struct LocalResult {
  std::vector<std::vector<int>> partition;  // clusters as global indices
  Eigen::MatrixXd eta;                      // one row per local cluster
};

LocalResult run_local_sweep(ModelState& state, StreamPanel& panel,
                            const ProcessorAllocation& alloc, int worker, Rng& rng) {
  std::vector<int> regions;
  for (int i = 0; i < state.p(); ++i)
    if (alloc.gamma[i] == worker) regions.push_back(i);
  LocalResult result;
  if (regions.empty()) {
    result.eta.resize(0, state.T());
    return result;
  }

  // Labels owned by this worker, in ascending order; every member of an
  // owned cluster must live here.
  std::vector<int> labels;
  for (int i : regions) labels.push_back(state.z[i]);
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  for (int i = 0; i < state.p(); ++i)
    if (std::binary_search(labels.begin(), labels.end(), state.z[i]) &&
        alloc.gamma[i] != worker)
      throw DataError("local_sweep: worker " + std::to_string(worker) +
                      " does not own a label-closed set of streams");

  const int pj = static_cast<int>(regions.size());
  const int Kj = static_cast<int>(labels.size());
  const int T = state.T();
  const int H = state.H();

  // Local sub-problem over copied cells; serial update code runs unchanged.
  std::vector<RawObs> obs;
  std::vector<std::string> ids;
  for (int jj = 0; jj < pj; ++jj) {
    const int i = regions[jj];
    ids.push_back(panel.region_ids[i]);
    for (int t = 0; t < T; ++t) {
      const Cell& c = panel.cell(i, t);
      for (int l = 0; l < c.count(); ++l) obs.push_back({jj, t, c.y[l], c.u[l]});
    }
  }
  StreamPanel sub_panel = build_panel(pj, T, H, obs, ids, panel.scale);

  ModelState sub;
  sub.hyper = state.hyper;
  sub.alpha = state.alpha;
  sub.sigma0_sq = state.sigma0_sq;
  sub.K = Kj;
  sub.z.resize(pj);
  sub.x.resize(pj, T);
  sub.x_init.resize(pj);
  sub.eta = Eigen::MatrixXd::Zero(Kj, T);
  sub.lambda.resize(pj);
  sub.a.resize(pj);
  sub.R.resize(pj);
  sub.beta.resize(pj, H);
  for (int jj = 0; jj < pj; ++jj) {
    const int i = regions[jj];
    sub.z[jj] = static_cast<int>(
        std::lower_bound(labels.begin(), labels.end(), state.z[i]) - labels.begin());
    sub.x.row(jj) = state.x.row(i);
    sub.x_init(jj) = state.x_init(i);
    sub.lambda(jj) = state.lambda(i);
    sub.a(jj) = state.a(i);
    sub.R(jj) = state.R(i);
    sub.beta.row(jj) = state.beta.row(i);
  }
  refresh_suffstats(sub_panel, sub.beta);

  sample_z(sub, sub_panel, rng, state.alpha / alloc.P);
  sample_x_eta(sub, sub_panel, rng);
  sample_lambda(sub, rng);
  sample_a(sub, rng);
  sample_R(sub, sub_panel, rng);
  sample_beta(sub, sub_panel, rng);

  // Write back per-region quantities; regions are disjoint across workers.
  for (int jj = 0; jj < pj; ++jj) {
    const int i = regions[jj];
    state.x.row(i) = sub.x.row(jj);
    state.x_init(i) = sub.x_init(jj);
    state.lambda(i) = sub.lambda(jj);
    state.a(i) = sub.a(jj);
    state.R(i) = sub.R(jj);
    state.beta.row(i) = sub.beta.row(jj);
    refresh_region_suffstats(panel, i, sub.beta.row(jj));
  }

  result.partition.resize(sub.K);
  for (int jj = 0; jj < pj; ++jj) result.partition[sub.z[jj]].push_back(regions[jj]);
  result.eta = sub.eta;
  return result;
}

}  // namespace

void local_sweep(ModelState& state, StreamPanel& panel,
                 const ProcessorAllocation& alloc, int worker, Rng& rng) {
  const LocalResult r = run_local_sweep(state, panel, alloc, worker, rng);

  // Stitch: foreign clusters keep their labels-in-order and eta rows, the
  // worker's refreshed clusters are appended with the imputed factors.
  std::vector<bool> owned_label(state.K, false);
  for (std::size_t i = 0; i < state.z.size(); ++i)
    if (alloc.gamma[i] == worker) owned_label[state.z[i]] = true;

  const auto old_clusters = state.clusters();
  std::vector<std::vector<int>> clusters;
  std::vector<int> old_label_of;  // -1 for the worker's new clusters
  for (int k = 0; k < state.K; ++k)
    if (!owned_label[k]) {
      clusters.push_back(old_clusters[k]);
      old_label_of.push_back(k);
    }
  for (const auto& c : r.partition) {
    clusters.push_back(c);
    old_label_of.push_back(-1);
  }

  Eigen::MatrixXd eta(static_cast<int>(clusters.size()), state.T());
  int local_row = 0;
  for (std::size_t k = 0; k < clusters.size(); ++k) {
    if (old_label_of[k] >= 0)
      eta.row(static_cast<int>(k)) = state.eta.row(old_label_of[k]);
    else
      eta.row(static_cast<int>(k)) = r.eta.row(local_row++);
  }
  for (std::size_t k = 0; k < clusters.size(); ++k)
    for (int i : clusters[k]) state.z[i] = static_cast<int>(k);
  state.K = static_cast<int>(clusters.size());
  state.eta = std::move(eta);
}

void parallel_sweep(ModelState& state, StreamPanel& panel,
                    ProcessorAllocation& alloc, std::vector<Rng>& worker_rngs,
                    Rng& main_rng, const SweepOptions& opts,
                    ParallelSweepTimings* timings) {
  using clock = std::chrono::steady_clock;
  const int P = alloc.P;
  if (static_cast<int>(worker_rngs.size()) != P)
    throw ConfigError("parallel_sweep: need one rng per worker");
  check_allocation(state.z, alloc);

  const auto t0 = clock::now();
  std::vector<LocalResult> results(P);
  std::vector<std::exception_ptr> errors(P);
  {
    std::vector<std::thread> pool;
    pool.reserve(P);
    for (int j = 0; j < P; ++j)
      pool.emplace_back([&, j] {
        try {
          results[j] = run_local_sweep(state, panel, alloc, j, worker_rngs[j]);
        } catch (...) {
          errors[j] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  // Merge: relabel clusters worker by worker; ownership is preserved since
  // locally created clusters stay on their worker.
  int K = 0;
  for (int j = 0; j < P; ++j) K += static_cast<int>(results[j].partition.size());
  Eigen::MatrixXd eta(K, state.T());
  int label = 0;
  for (int j = 0; j < P; ++j)
    for (std::size_t k = 0; k < results[j].partition.size(); ++k) {
      for (int i : results[j].partition[k]) state.z[i] = label;
      eta.row(label) = results[j].eta.row(static_cast<int>(k));
      ++label;
    }
  state.K = K;
  state.eta = std::move(eta);
  const auto t1 = clock::now();

  global_reassign(state.z, state.K, alloc, state.alpha, main_rng);
  const auto t2 = clock::now();

  sample_sigma0(state, main_rng);
  if (opts.sample_hypers) sample_hyperparams(state, main_rng);
  if (opts.sample_concentration) sample_alpha(state, main_rng);
  const auto t3 = clock::now();

  if (timings) {
    timings->local_seconds = std::chrono::duration<double>(t1 - t0).count();
    timings->global_seconds = std::chrono::duration<double>(t2 - t1).count();
    timings->shared_seconds = std::chrono::duration<double>(t3 - t2).count();
  }
}

}  // namespace hpi
