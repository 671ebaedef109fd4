#pragma once

#include <cstdint>
#include <vector>

namespace bmiopt {

/// Counter-based pseudo random source (splitmix64 over a Weyl sequence).
///
/// Streams are cheap to fork: a stream is fully determined by its key, and
/// keys are derived by mixing integer coordinates into a parent key.  The
/// search loops key one stream per (seed, generation, individual), so the
/// draws made for one individual never depend on how many draws another
/// individual consumed.
class SplitMix {
 public:
  explicit SplitMix(std::uint64_t key) : state_(key) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1); rejects the (measure-zero) exact zero.
  double uniform_open() {
    double u = uniform();
    while (u == 0.0) u = uniform();
    return u;
  }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in {0, ..., n-1}; n >= 1.
  std::size_t uniform_index(std::size_t n) {
    // Rejection-free modulo is fine here: n is tiny against 2^64.
    return static_cast<std::size_t>(next() % static_cast<std::uint64_t>(n));
  }

  bool coin() { return (next() & 1ull) != 0; }

  /// Derives the key of a child stream from integer coordinates.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t a,
                              std::uint64_t b = 0, std::uint64_t c = 0) {
    SplitMix m(seed ^ 0x6A09E667F3BCC909ull);
    m.state_ += a * 0x9E3779B97F4A7C15ull;
    m.next();
    m.state_ += b * 0xC2B2AE3D27D4EB4Full;
    m.next();
    m.state_ += c * 0x165667B19E3779F9ull;
    return m.next();
  }

 private:
  std::uint64_t state_;
};

}  // namespace bmiopt
