#pragma once

// Seeded randomness with results fixed across standard library implementations (the
// std:: distributions are not).

#include <cstdint>
#include <limits>
#include <random>
#include <utility>
#include <vector>

namespace procmine {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n) {
    const auto max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % n;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % n;
  }

  // Uniform integer in [lo, hi].
  int between(int lo, int hi) { return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1))); }

  // Uniform in [0, 1) with 53 random bits.
  double real() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool chance(double p) { return real() < p; }

  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[below(v.size())];
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace procmine
