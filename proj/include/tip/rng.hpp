#pragma once

// Counter-based random streams.
//
// Every draw is a pure function of (seed, stream tag, index): a stream key is
// derived by hashing the triple, and the per-index generator walks a SplitMix64
// sequence from that key. Sampling loops can therefore be split across threads
// in any way without changing results.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string_view>

namespace tip::rng {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Order-sensitive combination of two 64-bit words.
inline constexpr std::uint64_t combine(std::uint64_t h, std::uint64_t v) noexcept {
  return splitmix64(h ^ splitmix64(v + 0x632be59bd9b4e019ULL));
}

/// hash(seed, stream_tag, index): the sub-stream key.
inline constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t tag,
                                          std::uint64_t index) noexcept {
  return combine(combine(splitmix64(seed), tag), index);
}

/// FNV-1a, used to fold string identifiers (scenario ids) into seeds.
inline constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Stream tags reserved by the library.
namespace tags {
inline constexpr std::uint64_t kGroundTruth = 0;
inline constexpr std::uint64_t kPerception = 1;
inline constexpr std::uint64_t kControlNoise = 2;
inline constexpr std::uint64_t kInjection = 16;
}  // namespace tags

/// Generator for one (seed, tag, index) cell. Satisfies
/// UniformRandomBitGenerator so it can also feed <random> distributions.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  constexpr CounterRng(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) noexcept
      : state_(stream_key(seed, tag, index)) {}

  explicit constexpr CounterRng(std::uint64_t key) noexcept : state_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; both variates are derived from fresh
  /// draws so the result does not depend on call history beyond the counter.
  double normal() noexcept {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double sd) noexcept { return mean + sd * normal(); }

  bool bernoulli(double p) noexcept { return uniform() < p; }

 private:
  std::uint64_t state_;
};

}  // namespace tip::rng
