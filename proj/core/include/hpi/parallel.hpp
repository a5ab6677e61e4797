#pragma once

#include <map>
#include <vector>

#include "hpi/sampler.hpp"

namespace hpi {

// Worker assignment for every stream. Clusters are wholly owned:
// z_i == z_j implies gamma[i] == gamma[j].
struct ProcessorAllocation {
  int P = 1;
  std::vector<int> gamma;  // worker id in 0..P-1 per stream
};

// counts[j][s] = number of clusters of size s on worker j.
struct ClusterSizeHistogram {
  std::vector<std::map<int, int>> counts;

  static ClusterSizeHistogram build(const std::vector<int>& z,
                                    const ProcessorAllocation& alloc);
  // sum_s s * counts[j][s], the number of streams on worker j.
  int worker_load(int j) const;
};

// Draws phi ~ Dirichlet(alpha/P, ..., alpha/P) and gamma_i iid
// Multinomial(phi); phi is discarded afterwards.
ProcessorAllocation init_allocation(int p, int P, double alpha, Rng& rng);

// log p(gamma, partition sizes | alpha, P) up to terms constant in gamma:
// the Dirichlet-multinomial allocation mass times the per-worker CRP(alpha/P)
// partition mass. Used as the MH target for global_reassign.
double allocation_log_conditional(const std::vector<int>& z,
                                  const ProcessorAllocation& alloc, double alpha);

// Verifies the ownership invariant; throws DataError when violated.
void check_allocation(const std::vector<int>& z, const ProcessorAllocation& alloc);

// Joint Metropolis-Hastings move: every cluster is proposed a uniform
// worker independently; the move is accepted with the exact conditional
// ratio (which is identically one for this model, so the proposal is
// always accepted; the ratio is still computed and returned for
// diagnostics). Returns whether the proposal was accepted.
bool global_reassign(const std::vector<int>& z, int K, ProcessorAllocation& alloc,
                     double alpha, Rng& rng, double* log_ratio_out = nullptr);

// Local collapsed sweep for one worker: assignment updates restricted to
// the worker's streams with concentration alpha/P, followed by the
// parameter updates for owned clusters and regions (x, eta, lambda, a, R,
// beta). Shared parameters are untouched. Throws DataError if the worker's
// streams are not label-closed.
void local_sweep(ModelState& state, StreamPanel& panel,
                 const ProcessorAllocation& alloc, int worker, Rng& rng);

struct ParallelSweepTimings {
  double local_seconds = 0.0;
  double global_seconds = 0.0;
  double shared_seconds = 0.0;
};

// Barrier-synchronized sweep: (1) local_sweep on all workers concurrently,
// (2) serial global reassignment of clusters to workers, (3) serial shared
// parameter updates (sigma0_sq, hyperparameters, alpha). Per-worker RNG
// streams are derived from worker_rngs; the caller owns their sequencing.
void parallel_sweep(ModelState& state, StreamPanel& panel,
                    ProcessorAllocation& alloc, std::vector<Rng>& worker_rngs,
                    Rng& main_rng, const SweepOptions& opts = {},
                    ParallelSweepTimings* timings = nullptr);

}  // namespace hpi
