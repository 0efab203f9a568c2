#pragma once

// Counter-based random draws. Every draw is a pure function of (key, counter),
// so results do not depend on dispatch order or thread scheduling.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <string_view>

namespace pars::rng {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

constexpr std::uint64_t combine(std::uint64_t seed, std::uint64_t value) noexcept {
  return splitmix64(seed ^ splitmix64(value + 0x632BE59BD9B4E019ULL));
}

class KeyedStream {
 public:
  constexpr KeyedStream(std::uint64_t seed, std::initializer_list<std::uint64_t> parts) noexcept
      : key_(splitmix64(seed)) {
    for (auto p : parts) key_ = combine(key_, p);
  }

  constexpr std::uint64_t next_u64() noexcept { return combine(key_, counter_++); }

  // Uniform in [0, 1) with 53 bits of precision.
  constexpr double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in (0, 1).
  constexpr double uniform_open() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  // Box-Muller; consumes two counters per call so the stream layout is fixed.
  double normal(double mean = 0.0, double sd = 1.0) noexcept {
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    return mean + sd * z;
  }

  double lognormal(double log_mean, double log_sd) noexcept {
    return std::exp(normal(log_mean, log_sd));
  }

  // Uniform integer in [0, n), multiply-shift reduction.
  std::uint64_t index(std::uint64_t n) noexcept {
    const auto wide = static_cast<unsigned __int128>(next_u64()) * n;
    return static_cast<std::uint64_t>(wide >> 64);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace pars::rng
