#pragma once

#include <cstdint>
#include <random>

namespace dropfact {

/// Deterministic random stream used throughout the library.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard, so traces replay identically across toolchains. Uniform and
/// Gaussian variates are derived here rather than through the
/// implementation-defined std:: distributions:
///   - uniform01: one engine output, top 53 bits, in [0, 1);
///   - bernoulli: exactly one engine output per draw (u < p);
///   - normal: Box-Muller, two engine outputs per pair of variates.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream for (seed, stream) via a SplitMix64 mix.
  static Rng derive(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64() { return engine_(); }
  double uniform01();
  bool bernoulli(double p) { return uniform01() < p; }
  double normal(double mean, double stddev);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace dropfact
