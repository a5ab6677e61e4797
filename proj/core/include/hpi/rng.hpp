#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace hpi {

// Deterministic random source. All samplers draw through this wrapper so
// that results are reproducible across platforms and resumable runs: the
// variate algorithms are fixed here instead of delegating to the
// implementation-defined std::*_distribution classes, and the engine state
// round-trips through text for checkpoints.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Derives an independent stream; used for per-worker and per-chain RNGs.
  static Rng derive(std::uint64_t root_seed, std::uint64_t stream_id);

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer on [0, n).
  std::uint64_t uniform_index(std::uint64_t n);

  // Standard normal via Marsaglia polar (no cached spare, so the draw
  // sequence is a pure function of the engine state).
  double normal();
  double normal(double mean, double sd);

  // Gamma(shape, scale) by Marsaglia-Tsang, with the power boost for
  // shape < 1.
  double gamma(double shape, double scale);

  // Inverse-gamma with shape a and rate b (density ∝ x^{-a-1} e^{-b/x}).
  double inverse_gamma(double shape, double rate);

  double beta(double a, double b);

  int poisson(double mean);

  // Negative binomial with given mean and dispersion (size) r; gamma-Poisson
  // mixture.
  int negative_binomial(double mean, double dispersion);

  // Serialization for exact resume.
  std::string state() const;
  void set_state(const std::string& s);

 private:
  std::mt19937_64 engine_;
};

}  // namespace hpi
