#pragma once

#include <cmath>
#include <cstdint>

namespace spinlink {

// Counter-based splittable random stream.
//
// Output word i of a stream with key k is mix64(k + i * GOLDEN), the
// SplitMix64 construction (Steele, Lea & Flood 2014). A stream is fully
// identified by its 64-bit key; forking derives a child key from the parent
// key and a child index alone, so any worker can regenerate any substream
// without coordination and results never depend on call order or thread
// count.
//
// Substream layout used by the simulator (documented here because event
// files must be byte-identical across worker counts):
//   master                  = RandomStream(config seed)
//   per-cycle stream        = master.fork(global_cycle_index)
//   purpose substreams      = cycle.fork(purpose), purpose in:
//     0 emission draw, 1 memory channel, 2 detection, 3 HBT routing.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t key) : key_(key), counter_(0) {}

  std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kGolden); }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  // One standard normal via Box-Muller; consumes two words, caches nothing.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    // Guard the log against an exact zero draw.
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  double normal(double mean, double sigma) { return mean + sigma * normal(); }

  // Child stream identified by (parent key, child index). Independent of the
  // parent's counter position.
  RandomStream fork(std::uint64_t child) const {
    return RandomStream(mix64(key_ ^ mix64(child + kGolden)));
  }

  // O(1) seek past n single-word draws (uniform/bernoulli consume one word).
  void skip(std::uint64_t n) { counter_ += n; }

  std::uint64_t key() const { return key_; }

  // Binomial(n, p). Exact Bernoulli summation for modest n; Gaussian
  // approximation (clamped) once n p (1-p) is large enough that the error is
  // far below counting noise. Used for bootstrap resampling, not for the
  // per-cycle physics samplers.
  std::int64_t binomial(std::int64_t n, double p) {
    if (n < 0 || !(p >= 0.0 && p <= 1.0)) return 0;
    const double var = static_cast<double>(n) * p * (1.0 - p);
    if (n <= 4096 || var < 100.0) {
      std::int64_t k = 0;
      for (std::int64_t i = 0; i < n; ++i)
        if (bernoulli(p)) ++k;
      return k;
    }
    const double mean = static_cast<double>(n) * p;
    double draw = std::round(mean + std::sqrt(var) * normal());
    if (draw < 0.0) draw = 0.0;
    if (draw > static_cast<double>(n)) draw = static_cast<double>(n);
    return static_cast<std::int64_t>(draw);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

  // SplitMix64 finalizer (Stafford mix 13 variant).
  static std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace spinlink
