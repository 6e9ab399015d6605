#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace rfmia {

// splitmix64 finalizer; used both to seed streams and to mix labels.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for a named stage. Streams for different labels are independent, so
// changing what one stage draws never shifts another stage's numbers.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view label) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return mix64(master ^ mix64(h));
}

// xoshiro256** with hand-rolled distributions so that draws are identical
// across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) noexcept {
    std::uint64_t s = seed;
    for (auto& w : state_) {
      s = mix64(s);
      w = s;
    }
  }

  Rng(std::uint64_t master, std::string_view label) noexcept : Rng(derive_seed(master, label)) {}

  using result_type = std::uint64_t;
  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept {
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

  // Uniform on [0, 1).
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept {
    // Lemire's multiply-shift; bias is < 2^-64 * n and irrelevant here.
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>((*this)()) * n) >> 64);
  }

  bool bit() noexcept { return ((*this)() >> 63) != 0; }

  // Standard normal via Box-Muller (the second variate is discarded).
  double normal() noexcept {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Independent child stream, e.g. one per sample for parallel loops.
  Rng fork(std::uint64_t index) noexcept { return Rng(mix64((*this)() ^ mix64(index))); }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t state_[4];
};

template <class Range>
void shuffle(Range& r, Rng& rng) {
  using std::swap;
  const auto n = static_cast<std::uint64_t>(std::size(r));
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = rng.below(i);
    swap(r[i - 1], r[j]);
  }
}

}  // namespace rfmia
