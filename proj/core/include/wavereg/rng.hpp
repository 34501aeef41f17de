#ifndef WAVEREG_RNG_HPP
#define WAVEREG_RNG_HPP

#include <cmath>
#include <cstdint>

namespace wavereg {

/**
 * Deterministic splittable random stream built on splitmix64.
 *
 * Every stochastic component in the library draws from one of these so
 * that results are bit-identical across platforms and standard-library
 * versions.  A stream is addressed by (seed, stream): independent
 * substreams of the same master seed are obtained by changing the
 * stream index.
 */
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed, std::uint64_t stream = 0)
      : state_(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1))) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1), 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in (0, 1], safe as a log() argument.
  double next_double_open() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller on the stream's own uniforms.
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u = next_double_open();
    const double v = next_double();
    const double r = std::sqrt(-2.0 * std::log(u));
    const double a = 6.283185307179586476925286766559 * v;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  /// Standard Laplace (scale 1) via inverse CDF.
  double next_laplace() {
    const double u = next_double_open() - 0.5;
    return (u < 0.0 ? 1.0 : -1.0) * std::log(1.0 - 2.0 * std::abs(u));
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace wavereg

#endif  // WAVEREG_RNG_HPP
