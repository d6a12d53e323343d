#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>

namespace kickgen {

/// Identifiers for deriving independent RNG substreams from one global seed.
/// Adding a consumer must not perturb the draws of existing ones.
enum class Stream : std::uint64_t {
  kCorpus = 1,
  kInit = 2,
  kDropout = 3,
  kAugment = 4,
  kEta = 5,
  kSampling = 6,
  kExcerpt = 7,
  kKmeans = 8,
  kEval = 9,
};

/// xoshiro256++ seeded through splitmix64. Distributions are implemented by
/// hand so sequences are identical across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Deterministic substream for (seed, stream, path...). Different paths
  /// yield statistically independent generators.
  static Rng substream(std::uint64_t seed, Stream stream,
                       std::initializer_list<std::uint64_t> path = {});

  std::uint64_t next_u64();
  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);  // inclusive
  double normal();                       // N(0, 1)

 private:
  std::array<std::uint64_t, 4> state_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace kickgen
