#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace gplace {

// splitmix64 finalizer, used to spread seeds before feeding the engine.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// FNV-1a, for deriving per-job streams from string ids.
inline std::uint64_t hash_str(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Deterministic random source. mt19937_64 output is pinned by the standard,
/// and the draw helpers below avoid std::uniform_*_distribution (whose output
/// is implementation-defined), so sequences reproduce across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), eng_(mix64(seed)) {}

  /// Independent child stream; splitting does not disturb this stream.
  Rng stream(std::uint64_t id) const { return Rng(mix64(seed_ ^ mix64(id))); }
  Rng stream(std::string_view name) const { return stream(hash_str(name)); }

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform on [0,1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  /// Unbiased uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = n * (std::numeric_limits<std::uint64_t>::max() / n);
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  int below_int(int n) { return static_cast<int>(below(static_cast<std::uint64_t>(n))); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 eng_;
};

}  // namespace gplace
