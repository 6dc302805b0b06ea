#pragma once

#include <cstdint>
#include <random>

namespace wpc {

// Deterministic random source. The engine is std::mt19937_64, whose output
// sequence is pinned bit-for-bit by the standard; the distributions are
// implemented here by hand because the std:: distribution algorithms are
// implementation-defined and would break cross-platform reproducibility.
class Rng {
public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1): top 53 bits of the engine output.
  double uniform();
  // Uniform in [lo, hi).
  double uniform(double lo, double hi);
  // Standard normal via Box-Muller (pairs cached).
  double normal();
  // Poisson with mean lambda >= 0. Knuth multiplication for lambda <= 60,
  // rounded clamped Gaussian approximation above (mean error negligible at
  // those counts). Deterministic given the seed.
  int64_t poisson(double lambda);

  uint64_t next_u64() { return engine_(); }

private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Mixes a base seed with a stream tag (splitmix64 finalizer) so independent
// consumers of one scene seed get decorrelated engine seeds.
uint64_t hash_seed(uint64_t seed, uint64_t stream);

}  // namespace wpc
