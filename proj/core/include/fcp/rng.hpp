#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace fcp {

// Seeded random stream. The engine is std::mt19937_64, whose output sequence
// is fixed by the standard; the real-valued transforms are implemented here
// rather than with <random> distributions, whose algorithms are
// implementation-defined. Identical seeds therefore give identical streams on
// every conforming toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer in [0, n); n > 0. Rejection sampling, no modulo bias.
  std::size_t index(std::size_t n);
  double normal();  // Box-Muller, standard normal
  // Draw from an unnormalized nonnegative weight vector.
  std::size_t categorical(std::span<const double> weights);

  template <class It>
  void shuffle(It first, It last) {
    auto n = static_cast<std::size_t>(last - first);
    for (std::size_t i = n; i > 1; --i) {
      std::size_t j = index(i);
      std::swap(first[i - 1], first[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Stream seed for (stage, worker): splitmix64 of master_seed mixed with the
// FNV-1a hash of the stage name and the worker index. Every stochastic stage
// draws from its own derived stream so results do not depend on the order
// stages or workers run in.
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view stage, std::uint64_t worker = 0);

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace fcp
