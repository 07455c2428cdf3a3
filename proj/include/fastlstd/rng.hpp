#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "fastlstd/errors.hpp"
#include "fastlstd/types.hpp"

namespace fastlstd {

/// Deterministic generator owned by exactly one run.
///
/// xoshiro256** seeded through splitmix64, implemented in-repo so that a
/// given seed produces the same index stream on every platform and in every
/// language port. Bounded draws use rejection so indices over {1..t} are
/// exactly uniform.
class RngHandle {
 public:
  explicit RngHandle(std::uint64_t seed) : seed_(seed) {
    // splitmix64 state expansion; avoids the all-zero state for every seed.
    std::uint64_t x = seed;
    for (auto& s : state_) {
      x += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      s = z ^ (z >> 31);
    }
  }

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform index in [1, t]. Exactly uniform via rejection.
  Index draw_index(Index t) {
    if (t < 1) throw EmptyPoolError("draw_index: empty pool (t = 0)");
    const std::uint64_t bound = static_cast<std::uint64_t>(t);
    const std::uint64_t threshold = (0ULL - bound) % bound;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return static_cast<Index>(r % bound) + 1;
    }
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via the Marsaglia polar method (no trig, stream-stable).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return u * m;
  }

  /// Fisher-Yates permutation of {0, ..., n-1}.
  std::vector<Index> permutation(Index n) {
    std::vector<Index> p(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
    for (Index i = n - 1; i > 0; --i) {
      const Index j = draw_index(i + 1) - 1;
      std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]);
    }
    return p;
  }

  /// Uniform point in the d-dimensional unit ball.
  template <typename Scalar = double>
  Vector<Scalar> unit_ball(Index dim) {
    Vector<Scalar> x(dim);
    for (Index i = 0; i < dim; ++i) x[i] = static_cast<Scalar>(normal());
    const Scalar norm = x.norm();
    const Scalar radius =
        static_cast<Scalar>(std::pow(uniform01(), 1.0 / static_cast<double>(dim)));
    if (norm > Scalar(0)) x *= radius / norm;
    return x;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t seed_;
  std::uint64_t state_[4];
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Uniform index in [1, t], advancing the handle.
inline Index draw_index(RngHandle& rng, Index t) { return rng.draw_index(t); }

}  // namespace fastlstd
