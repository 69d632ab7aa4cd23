#pragma once

#include <cstdint>
#include <random>

#include "nlgd/types.hpp"

namespace nlgd {

// Named sub-streams split off a single master seed.
enum class Stream : std::uint64_t {
  kGraph = 1,
  kParameters = 2,
  kInitialPoint = 3,
  kNoise = 4,
  kTest = 99,
};

// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t x) noexcept;
std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t index = 0) noexcept;

// Seeded generator with a fully specified output sequence.
//
// The engine is std::mt19937_64, whose output is pinned by the standard.
// Uniform doubles take the top 53 bits. Standard normals use the Box-Muller
// transform on pairs (u1, u2), u1 in (0,1], returning the cosine branch first
// and the cached sine branch on the next call. None of the
// implementation-defined <random> distributions are used, so a seed produces
// the same stream on every conforming toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n); n > 0.
  std::uint64_t index(std::uint64_t n);
  double normal();

  Vector normal_vector(Eigen::Index size, double stddev = 1.0);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace nlgd
