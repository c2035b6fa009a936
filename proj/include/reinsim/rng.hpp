#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace reinsim {

inline constexpr double kTwoPi = 6.28318530717958647692;

// splitmix64 finalizer, used to derive child-stream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seeded random stream with deterministic child derivation. Parallel
/// simulations split one stream per work item (keyed by index), so results
/// do not depend on thread scheduling.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : root_(seed), engine_(mix64(seed)) {}

  RngStream split(std::uint64_t index) const {
    return RngStream(mix64(root_ ^ mix64(index + 0x632be59bd9b4e019ULL)));
  }

  std::uint64_t seed() const { return root_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: n must be > 0");
    return engine_() % n;
  }

  // Standard normal via Box-Muller (no cached spare, two uniforms per draw).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

 private:
  std::uint64_t root_;
  std::mt19937_64 engine_;
};

// Exact Poisson sampler. Knuth's product method for small means; larger
// means split by Poisson additivity so the product never underflows.
inline int sample_poisson(double mean, RngStream& rng) {
  if (!(mean >= 0.0)) throw std::invalid_argument("poisson mean must be >= 0");
  if (mean == 0.0) return 0;
  if (mean > 30.0) {
    const double half = 0.5 * mean;
    return sample_poisson(half, rng) + sample_poisson(mean - half, rng);
  }
  const double limit = std::exp(-mean);
  int count = -1;
  double product = 1.0;
  do {
    ++count;
    product *= 1.0 - rng.uniform();
  } while (product > limit);
  return count;
}

template <typename T>
void shuffle_in_place(std::vector<T>& items, RngStream& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform_index(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace reinsim
