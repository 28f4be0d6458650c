#pragma once

#include <cstdint>
#include <random>

namespace sparsereg {

/// Mixes a master seed with a task index into an independent stream seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Seeded generator. Distribution transforms are written out here rather
/// than taken from <random> so streams are identical across standard
/// library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n);

  double normal(double mean, double stddev);

  /// Child generator seeded from this stream.
  Rng split() { return Rng(derive_seed(next(), 0x9e3779b97f4a7c15ULL)); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace sparsereg
