#ifndef BMV_RNG_HPP
#define BMV_RNG_HPP

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>

namespace bmv {

/// Counter-based Philox4x32-10 generator.
///
/// The 64-bit seed is the key; the 64-bit stream id occupies the upper half
/// of the 128-bit counter, so every (seed, stream) pair is an independent
/// sequence and `split` never needs to advance the parent.
class Philox {
 public:
  using result_type = std::uint32_t;

  explicit Philox(std::uint64_t seed = 0, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t position() const { return counter_ * 4 + (4 - available_); }

  /// Independent child stream; the child id is mixed so nested splits do not
  /// collide with sibling ids.
  Philox split(std::uint64_t child) const {
    return Philox(seed_, mix(stream_ * 0x9E3779B97F4A7C15ULL + child + 1));
  }

  result_type operator()() {
    if (available_ == 0) {
      block_ = generate(counter_++);
      available_ = 4;
    }
    return block_[4 - available_--];
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    std::uint64_t hi = (*this)();
    std::uint64_t lo = (*this)();
    std::uint64_t bits = ((hi << 32) | lo) >> 11;
    return static_cast<double>(bits) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; one cached spare value.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 == 0.0);
    double u2 = uniform();
    double rad = std::sqrt(-2.0 * std::log(u1));
    double ang = 2.0 * std::numbers::pi * u2;
    spare_ = rad * std::sin(ang);
    has_spare_ = true;
    return rad * std::cos(ang);
  }

  /// Standard complex Gaussian, E|z|^2 = 1.
  std::complex<double> complex_normal() {
    double re = normal() * std::numbers::sqrt2 / 2.0;
    double im = normal() * std::numbers::sqrt2 / 2.0;
    return {re, im};
  }

  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                          std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t v = 0;
    do {
      v = (static_cast<std::uint64_t>((*this)()) << 32) | (*this)();
    } while (v >= limit);
    return lo + static_cast<std::int64_t>(v % span);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::array<std::uint32_t, 4> generate(std::uint64_t ctr) const {
    constexpr std::uint32_t kM0 = 0xD2511F53, kM1 = 0xCD9E8D57;
    constexpr std::uint32_t kW0 = 0x9E3779B9, kW1 = 0xBB67AE85;
    std::array<std::uint32_t, 4> c{
        static_cast<std::uint32_t>(ctr), static_cast<std::uint32_t>(ctr >> 32),
        static_cast<std::uint32_t>(stream_),
        static_cast<std::uint32_t>(stream_ >> 32)};
    std::uint32_t k0 = static_cast<std::uint32_t>(seed_);
    std::uint32_t k1 = static_cast<std::uint32_t>(seed_ >> 32);
    for (int round = 0; round < 10; ++round) {
      std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
      std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
      auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      auto lo0 = static_cast<std::uint32_t>(p0);
      auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      auto lo1 = static_cast<std::uint32_t>(p1);
      c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
      k0 += kW0;
      k1 += kW1;
    }
    return c;
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int available_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace bmv

#endif  // BMV_RNG_HPP
