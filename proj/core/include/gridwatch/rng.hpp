#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace gridwatch {

// Deterministic random primitives. std::mt19937_64 is bit-exact across
// platforms but the standard distributions are not, so the samplers here
// are hand-rolled on top of the raw engine.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = engine_();
    while (v >= limit) v = engine_();
    return v % n;
  }

  /// Standard normal via Box-Muller (one value per call, no caching).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  double normal(double mean, double sigma) { return mean + sigma * normal(); }

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  /// k distinct indices from [0, n), returned sorted.
  std::vector<std::int64_t> sample_without_replacement(std::int64_t n, std::int64_t k);

private:
  std::mt19937_64 engine_;
};

/// FNV-1a, used to derive stable per-column seeds and config hashes.
std::uint64_t fnv1a(const std::string& s);

/// Stable sub-seed for a named stream (e.g. one per frame column).
inline std::uint64_t derive_seed(std::uint64_t master, const std::string& stream) {
  return master ^ (fnv1a(stream) | 1ull);
}

}  // namespace gridwatch
