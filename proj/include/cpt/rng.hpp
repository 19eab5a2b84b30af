#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <iterator>
#include <utility>

namespace cpt {

/// SplitMix64 output finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

/// Hashes a master seed and a path of stream coordinates into a stream key.
/// Distinct paths give statistically independent streams, so work items can
/// be evaluated in any order (or on any thread) with identical results.
constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                    std::initializer_list<std::uint64_t> path) noexcept
{
  std::uint64_t h = mix64(seed ^ 0x6A09E667F3BCC909ULL);
  for (std::uint64_t coord : path)
    h = mix64(h ^ mix64(coord + kGoldenGamma));
  return h;
}

/// Stream tags, used as the first coordinate of a derived path.
enum class StreamTag : std::uint64_t {
  shuffle = 1,
  classifier = 2,
  tie_break = 3,
  partition = 4,
  data = 5,
  test = 6,
};

constexpr std::uint64_t tag(StreamTag t) noexcept { return static_cast<std::uint64_t>(t); }

/// Counter-based generator: the i-th draw is mix64(key + i * gamma). The state
/// is just (key, counter), so any position in the stream is addressable.
class Stream
{
public:
  using result_type = std::uint64_t;

  constexpr explicit Stream(std::uint64_t key) noexcept : key_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept { return at(++counter_); }
  constexpr result_type at(std::uint64_t i) const noexcept { return mix64(key_ + i * kGoldenGamma); }

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t position() const noexcept { return counter_; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform on {0, ..., n-1}; n > 0. Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t n) noexcept
  {
    __uint128_t m = static_cast<__uint128_t>((*this)()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<__uint128_t>((*this)()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Standard normal by the Box-Muller transform; the second variate is cached.
  double normal() noexcept
  {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 == 0.0)
      u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Fisher-Yates shuffle over any random-access range.
template <class Range>
void shuffle(Range& r, Stream& rng)
{
  using std::swap;
  const auto n = static_cast<std::uint64_t>(std::size(r));
  for (std::uint64_t i = n; i > 1; --i) {
    const std::uint64_t j = rng.below(i);
    swap(r[i - 1], r[j]);
  }
}

} // namespace cpt
