#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hpi/parallel.hpp"
#include "hpi/sampler.hpp"

namespace hpi {

struct FitOptions {
  int iterations = 1000;
  int burn_in = 500;
  int thinning = 5;
  int workers = 1;
  int checkpoint_every = 0;       // sweeps between checkpoints; 0 disables
  std::string checkpoint_path;    // required when checkpoint_every > 0
  SweepOptions sweep;
  HyperParams hyper;
  std::string config_hash;        // stamped into checkpoints and archives

  void validate() const;
};

// Thinned posterior sample.
struct Sample {
  int sweep = 0;
  std::vector<int> z;
  int K = 0;
  double alpha = 0.0;
  double sigma0_sq = 0.0;
  Eigen::VectorXd lambda, a, R;
  Eigen::MatrixXd beta;  // p x H
  Eigen::MatrixXd x;     // p x T
};

struct ChainResult {
  std::uint64_t seed = 0;
  std::vector<Sample> samples;
  double wall_seconds = 0.0;
  ParallelSweepTimings phase_totals;  // populated when workers > 1
  ModelState final_state;
};

struct ChainArchive {
  std::string config_hash;
  int p = 0, T = 0, H = 0;
  double scale = 200.0;
  int workers = 1;
  std::vector<std::string> region_ids;
  std::vector<ChainResult> chains;

  std::vector<const Sample*> all_samples() const;
};

using SweepCallback = std::function<void(int sweep, const ModelState&)>;

// Runs one chain from a deterministic initial state. The callback (when
// set) fires after every sweep. Checkpoints capture state, RNG positions,
// allocation, and the samples collected so far, enabling exact resume.
ChainResult run_chain(StreamPanel& panel, const FitOptions& opts,
                      std::uint64_t seed, const SweepCallback& callback = {});

// Resumes from a checkpoint written by run_chain. Refuses (ConfigError)
// when the checkpoint's config hash does not match opts.config_hash.
ChainResult resume_chain(StreamPanel& panel, const FitOptions& opts,
                         const std::string& checkpoint_file,
                         const SweepCallback& callback = {});

// Runs `chains` chains sequentially with seeds derived from `seed`.
ChainArchive run_chains(StreamPanel& panel, const FitOptions& opts, int chains,
                        std::uint64_t seed);

std::string archive_to_json(const ChainArchive& archive);
ChainArchive archive_from_json(const std::string& text);
void save_archive(const std::string& path, const ChainArchive& archive);
ChainArchive load_archive(const std::string& path);

}  // namespace hpi
