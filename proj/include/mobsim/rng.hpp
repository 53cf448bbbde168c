#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mobsim {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::uint64_t splitmix64(std::uint64_t x);

/// Independent stream seed for one named consumer of a run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key);

/// Seeded generator with portable draws. The standard distributions are
/// implementation-defined, so everything here is built on raw engine output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace mobsim
