#include "hpi/fit.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hpi/errors.hpp"

namespace hpi {

using nlohmann::json;

void FitOptions::validate() const {
  if (iterations < 1) throw ConfigError("fit: iterations must be >= 1");
  if (burn_in < 0 || burn_in >= iterations)
    throw ConfigError("fit: need 0 <= burn_in < iterations");
  if (thinning < 1) throw ConfigError("fit: thinning must be >= 1");
  if (workers < 1) throw ConfigError("fit: workers must be >= 1");
  if (checkpoint_every < 0) throw ConfigError("fit: checkpoint_every must be >= 0");
  if (checkpoint_every > 0 && checkpoint_path.empty())
    throw ConfigError("fit: checkpoint_path required when checkpointing");
  hyper.validate();
}

namespace {

Sample take_sample(int sweep, const ModelState& s) {
  Sample out;
  out.sweep = sweep;
  out.z = s.z;
  out.K = s.K;
  out.alpha = s.alpha;
  out.sigma0_sq = s.sigma0_sq;
  out.lambda = s.lambda;
  out.a = s.a;
  out.R = s.R;
  out.beta = s.beta;
  out.x = s.x;
  return out;
}

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}
Eigen::VectorXd vec_from(const json& j) {
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = j.at(i).get<double>();
  return v;
}
json mat_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}
Eigen::MatrixXd mat_from(const json& j) {
  if (j.empty()) return Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd m(j.size(), j.at(0).size());
  for (std::size_t r = 0; r < j.size(); ++r)
    for (std::size_t c = 0; c < j.at(r).size(); ++c)
      m(r, c) = j.at(r).at(c).get<double>();
  return m;
}

json sample_to_json(const Sample& s) {
  return json{{"sweep", s.sweep},   {"z", s.z},
              {"K", s.K},           {"alpha", s.alpha},
              {"sigma0_sq", s.sigma0_sq}, {"lambda", vec_json(s.lambda)},
              {"a", vec_json(s.a)}, {"R", vec_json(s.R)},
              {"beta", mat_json(s.beta)}, {"x", mat_json(s.x)}};
}

Sample sample_from_json(const json& j) {
  Sample s;
  s.sweep = j.at("sweep");
  s.z = j.at("z").get<std::vector<int>>();
  s.K = j.at("K");
  s.alpha = j.at("alpha");
  s.sigma0_sq = j.at("sigma0_sq");
  s.lambda = vec_from(j.at("lambda"));
  s.a = vec_from(j.at("a"));
  s.R = vec_from(j.at("R"));
  s.beta = mat_from(j.at("beta"));
  s.x = mat_from(j.at("x"));
  return s;
}

struct ChainProgress {
  ModelState state;
  ProcessorAllocation alloc;
  Rng main_rng{0};
  std::vector<Rng> worker_rngs;
  int next_sweep = 1;
  std::vector<Sample> samples;
};

void write_checkpoint(const std::string& path, const FitOptions& opts,
                      std::uint64_t seed, const ChainProgress& prog) {
  json j;
  j["format"] = "hpindex-checkpoint-v1";
  j["config_hash"] = opts.config_hash;
  j["seed"] = seed;
  j["next_sweep"] = prog.next_sweep;
  j["state"] = json::parse(state_to_json(prog.state));
  j["rng_main"] = prog.main_rng.state();
  json workers = json::array();
  for (const auto& r : prog.worker_rngs) workers.push_back(r.state());
  j["rng_workers"] = workers;
  j["gamma"] = prog.alloc.gamma;
  j["P"] = prog.alloc.P;
  json samples = json::array();
  for (const auto& s : prog.samples) samples.push_back(sample_to_json(s));
  j["samples"] = samples;
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp);
    if (!os) throw DataError("cannot write checkpoint: " + tmp);
    os << j.dump();
  }
  std::rename(tmp.c_str(), path.c_str());
}

ChainProgress read_checkpoint(const std::string& path, const FitOptions& opts,
                              std::uint64_t* seed_out) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot read checkpoint: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::exception& e) {
    throw DataError(std::string("corrupt checkpoint: ") + e.what());
  }
  if (j.value("format", "") != "hpindex-checkpoint-v1")
    throw DataError("corrupt checkpoint: unknown format");
  if (j.at("config_hash").get<std::string>() != opts.config_hash)
    throw ConfigError("checkpoint config hash mismatch: refusing resume (have " +
                      opts.config_hash + ", checkpoint " +
                      j.at("config_hash").get<std::string>() + ")");
  ChainProgress prog;
  *seed_out = j.at("seed").get<std::uint64_t>();
  prog.next_sweep = j.at("next_sweep");
  prog.state = state_from_json(j.at("state").dump());
  prog.main_rng.set_state(j.at("rng_main").get<std::string>());
  for (const auto& w : j.at("rng_workers")) {
    Rng r(0);
    r.set_state(w.get<std::string>());
    prog.worker_rngs.push_back(std::move(r));
  }
  prog.alloc.P = j.at("P");
  prog.alloc.gamma = j.at("gamma").get<std::vector<int>>();
  for (const auto& s : j.at("samples")) prog.samples.push_back(sample_from_json(s));
  return prog;
}

ChainResult drive_chain(StreamPanel& panel, const FitOptions& opts,
                        std::uint64_t seed, ChainProgress prog,
                        const SweepCallback& callback) {
  const auto t0 = std::chrono::steady_clock::now();
  ChainResult result;
  result.seed = seed;
  result.samples = std::move(prog.samples);

  refresh_suffstats(panel, prog.state.beta);
  for (int sweep = prog.next_sweep; sweep <= opts.iterations; ++sweep) {
    if (opts.workers == 1) {
      gibbs_sweep(prog.state, panel, prog.main_rng, opts.sweep);
    } else {
      ParallelSweepTimings timings;
      if (opts.sweep.sample_assignments) {
        parallel_sweep(prog.state, panel, prog.alloc, prog.worker_rngs,
                       prog.main_rng, opts.sweep, &timings);
      } else {
        gibbs_sweep(prog.state, panel, prog.main_rng, opts.sweep);
      }
      result.phase_totals.local_seconds += timings.local_seconds;
      result.phase_totals.global_seconds += timings.global_seconds;
      result.phase_totals.shared_seconds += timings.shared_seconds;
    }
    if (callback) callback(sweep, prog.state);
    if (sweep > opts.burn_in && (sweep - opts.burn_in) % opts.thinning == 0)
      result.samples.push_back(take_sample(sweep, prog.state));
    if (opts.checkpoint_every > 0 && (sweep % opts.checkpoint_every == 0 ||
                                      sweep == opts.iterations)) {
      prog.next_sweep = sweep + 1;
      prog.samples = result.samples;
      write_checkpoint(opts.checkpoint_path, opts, seed, prog);
    }
  }
  result.final_state = std::move(prog.state);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

ChainProgress fresh_progress(const StreamPanel& panel, const FitOptions& opts,
                             std::uint64_t seed) {
  ChainProgress prog;
  prog.main_rng = Rng::derive(seed, 0);
  for (int j = 0; j < opts.workers; ++j)
    prog.worker_rngs.push_back(Rng::derive(seed, 1 + j));
  prog.state = make_initial_state(panel, opts.hyper, prog.main_rng);
  if (opts.workers > 1) {
    prog.alloc = init_allocation(panel.p, opts.workers, prog.state.alpha,
                                 prog.main_rng);
  } else {
    prog.alloc.P = 1;
    prog.alloc.gamma.assign(panel.p, 0);
  }
  prog.next_sweep = 1;
  return prog;
}

}  // namespace

ChainResult run_chain(StreamPanel& panel, const FitOptions& opts,
                      std::uint64_t seed, const SweepCallback& callback) {
  opts.validate();
  if (opts.hyper.mu_h.size() != panel.H)
    throw ConfigError("fit: hyper hedonic dimension must match the panel");
  return drive_chain(panel, opts, seed, fresh_progress(panel, opts, seed), callback);
}

ChainResult resume_chain(StreamPanel& panel, const FitOptions& opts,
                         const std::string& checkpoint_file,
                         const SweepCallback& callback) {
  opts.validate();
  std::uint64_t seed = 0;
  ChainProgress prog = read_checkpoint(checkpoint_file, opts, &seed);
  if (static_cast<int>(prog.worker_rngs.size()) != opts.workers)
    throw ConfigError("checkpoint worker count does not match --workers");
  return drive_chain(panel, opts, seed, std::move(prog), callback);
}

ChainArchive run_chains(StreamPanel& panel, const FitOptions& opts, int chains,
                        std::uint64_t seed) {
  if (chains < 1) throw ConfigError("fit: chains must be >= 1");
  ChainArchive archive;
  archive.config_hash = opts.config_hash;
  archive.p = panel.p;
  archive.T = panel.T;
  archive.H = panel.H;
  archive.scale = panel.scale;
  archive.workers = opts.workers;
  archive.region_ids = panel.region_ids;
  for (int c = 0; c < chains; ++c) {
    FitOptions chain_opts = opts;
    if (!opts.checkpoint_path.empty() && chains > 1)
      chain_opts.checkpoint_path = opts.checkpoint_path + ".chain" + std::to_string(c);
    archive.chains.push_back(
        run_chain(panel, chain_opts, Rng::derive(seed, 1000 + c).next_u64()));
  }
  return archive;
}

std::vector<const Sample*> ChainArchive::all_samples() const {
  std::vector<const Sample*> out;
  for (const auto& c : chains)
    for (const auto& s : c.samples) out.push_back(&s);
  return out;
}

std::string archive_to_json(const ChainArchive& archive) {
  json j;
  j["format"] = "hpindex-archive-v1";
  j["config_hash"] = archive.config_hash;
  j["p"] = archive.p;
  j["T"] = archive.T;
  j["H"] = archive.H;
  j["scale"] = archive.scale;
  j["workers"] = archive.workers;
  j["region_ids"] = archive.region_ids;
  json chains = json::array();
  for (const auto& c : archive.chains) {
    json jc;
    jc["seed"] = c.seed;
    jc["wall_seconds"] = c.wall_seconds;
    jc["phase_local_seconds"] = c.phase_totals.local_seconds;
    jc["phase_global_seconds"] = c.phase_totals.global_seconds;
    jc["phase_shared_seconds"] = c.phase_totals.shared_seconds;
    json samples = json::array();
    for (const auto& s : c.samples) samples.push_back(sample_to_json(s));
    jc["samples"] = samples;
    chains.push_back(std::move(jc));
  }
  j["chains"] = chains;
  return j.dump();
}

ChainArchive archive_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("corrupt archive: ") + e.what());
  }
  if (j.value("format", "") != "hpindex-archive-v1")
    throw DataError("corrupt archive: unknown format");
  ChainArchive archive;
  archive.config_hash = j.at("config_hash");
  archive.p = j.at("p");
  archive.T = j.at("T");
  archive.H = j.at("H");
  archive.scale = j.at("scale");
  archive.workers = j.at("workers");
  archive.region_ids = j.at("region_ids").get<std::vector<std::string>>();
  for (const auto& jc : j.at("chains")) {
    ChainResult c;
    c.seed = jc.at("seed").get<std::uint64_t>();
    c.wall_seconds = jc.at("wall_seconds");
    c.phase_totals.local_seconds = jc.value("phase_local_seconds", 0.0);
    c.phase_totals.global_seconds = jc.value("phase_global_seconds", 0.0);
    c.phase_totals.shared_seconds = jc.value("phase_shared_seconds", 0.0);
    for (const auto& js : jc.at("samples")) c.samples.push_back(sample_from_json(js));
    archive.chains.push_back(std::move(c));
  }
  return archive;
}

void save_archive(const std::string& path, const ChainArchive& archive) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write archive: " + path);
  os << archive_to_json(archive);
}

ChainArchive load_archive(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot read archive: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return archive_from_json(ss.str());
}

}  // namespace hpi
