#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace szz {

// Seeded draw layer over std::mt19937_64. Every variate is derived from raw
// 64-bit words, so streams depend only on the engine, not on the standard
// library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Independent stream for replicate `stream` of a base seed.
  Rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32)};
    engine_.seed(seq);
  }

  std::uint64_t next_word() { return engine_(); }

  // Strictly inside (0, 1).
  double uniform01() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Mean-1 exponential; uniform01 never returns 0, so the log is finite.
  double exponential() { return -std::log(uniform01()); }

  double exponential(double mean) { return mean * exponential(); }

  double normal() {
    const double u = uniform01();
    const double v = uniform01();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * kPi * v);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Unit-scale Laplace: random sign on a mean-1 exponential magnitude.
  double laplace() {
    const double magnitude = exponential();
    return coin() ? magnitude : -magnitude;
  }

  bool coin() { return (engine_() >> 63) != 0; }

  double rademacher() { return coin() ? 1.0 : -1.0; }

  // Uniform over {0, ..., n-1} by rejection on the top bits.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t word;
    do {
      word = engine_();
    } while (word >= limit);
    return word % n;
  }

 private:
  static constexpr double kPi = 3.141592653589793238462643383279502884;
  std::mt19937_64 engine_;
};

}  // namespace szz
