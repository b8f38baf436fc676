#pragma once

#include <cstdint>
#include <random>

namespace qvote {

/// Seeded deterministic generator shared by every stochastic step of a run.
///
/// Built on std::mt19937_64, whose output sequence is fixed by the standard,
/// and derives doubles and bounded integers itself so that streams are
/// bit-identical across standard library implementations. The std
/// distributions are implementation-defined and are not used.
///
/// Keys produced from this generator are labeled `simulated-qrng`: they stand
/// in for a hardware quantum random number generator.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [0, bound). Rejection sampling, so no modulo bias.
  std::uint64_t below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % bound;
  }

 private:
  std::mt19937_64 engine_;
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// sub_seed = splitmix64(master ^ splitmix64(index)). Used for independent
/// trajectories and sweep points so they can run in any order or in parallel.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master ^ splitmix64(index));
}

}  // namespace qvote
